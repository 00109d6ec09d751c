//! Process-level tuning.

/// Serve every allocation from the heap and never return freed memory to the
/// system. Training allocates and drops tensors of tens of megabytes per
/// layer; with the default allocator settings each one is a fresh mapping
/// whose pages fault in on first touch. Call once at process start.
pub fn retain_freed_memory() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    unsafe {
        libc::mallopt(libc::M_MMAP_MAX, 0);
        libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
    }
}
