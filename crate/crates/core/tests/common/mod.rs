//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use edgekit_core::edgemap::BinaryMap;
use edgekit_core::eval::{f_measure, match_radius};
use edgekit_core::nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Nested-loop cross-correlation with zero padding.
pub fn conv_oracle(x: &Tensor, w: &Tensor, b: &[f64], stride: usize, pad: usize) -> Tensor {
    let (xs, ws) = (x.shape(), w.shape());
    let (n, c, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
    let (co, kh, kw) = (ws[0], ws[2], ws[3]);
    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (wd + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0; n * co * ho * wo];
    for i in 0..n {
        for o in 0..co {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = b[o];
                    for ci in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                let xv = x.data()[((i * c + ci) * h + iy as usize) * wd + ix as usize];
                                let wv = w.data()[((o * c + ci) * kh + ky) * kw + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[((i * co + o) * ho + oy) * wo + ox] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, co, ho, wo], out).unwrap()
}

/// Scatter form of the transposed convolution: every input pixel stamps the
/// kernel onto the upsampled output.
pub fn tconv_oracle(x: &Tensor, w: &Tensor, b: &[f64], stride: usize, pad: usize) -> Tensor {
    let (xs, ws) = (x.shape(), w.shape());
    let (n, co, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
    let (ci, kh, kw) = (ws[1], ws[2], ws[3]);
    let ho = (h - 1) * stride + kh - 2 * pad;
    let wo = (wd - 1) * stride + kw - 2 * pad;
    let mut out = vec![0.0; n * ci * ho * wo];
    for i in 0..n {
        for c in 0..ci {
            for v in &mut out[(i * ci + c) * ho * wo..(i * ci + c + 1) * ho * wo] {
                *v = b[c];
            }
        }
        for o in 0..co {
            for y in 0..h {
                for x0 in 0..wd {
                    let xv = x.data()[((i * co + o) * h + y) * wd + x0];
                    for c in 0..ci {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let oy = (y * stride + ky) as isize - pad as isize;
                                let ox = (x0 * stride + kx) as isize - pad as isize;
                                if oy < 0 || ox < 0 || oy >= ho as isize || ox >= wo as isize {
                                    continue;
                                }
                                let wv = w.data()[((o * ci + c) * kh + ky) * kw + kx];
                                out[((i * ci + c) * ho + oy as usize) * wo + ox as usize] += xv * wv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, ci, ho, wo], out).unwrap()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Central difference of `f` at `x[i]`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

/// Set pixels of each map and, per prediction pixel, its neighbours in the gt list.
pub type Adjacency = (Vec<usize>, Vec<usize>, Vec<Vec<usize>>);

/// Adjacency between set pixels of `pred` and `gt` within the radius.
pub fn adjacency(pred: &BinaryMap, gt: &BinaryMap, max_dist: f64) -> Adjacency {
    let r = match_radius(pred.height, pred.width, max_dist);
    let ps: Vec<usize> = (0..pred.bits.len()).filter(|&i| pred.bits[i]).collect();
    let gs: Vec<usize> = (0..gt.bits.len()).filter(|&i| gt.bits[i]).collect();
    let w = pred.width as f64;
    let adj = ps
        .iter()
        .map(|&p| {
            let (py, px) = ((p as f64 / w).floor(), (p % pred.width) as f64);
            (0..gs.len())
                .filter(|&j| {
                    let g = gs[j];
                    let (gy, gx) = ((g as f64 / w).floor(), (g % gt.width) as f64);
                    (py - gy).powi(2) + (px - gx).powi(2) <= r * r + 1e-9
                })
                .collect()
        })
        .collect();
    (ps, gs, adj)
}

/// Maximum bipartite matching size by simple augmenting-path search.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].map_or(true, |o| augment(o, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    (0..adj.len())
        .filter(|&u| augment(u, adj, &mut vec![false; n_right], &mut owner))
        .count()
}

/// Maximum matching size by exhaustive recursion; only for a handful of pixels.
pub fn max_matching_exhaustive(adj: &[Vec<usize>], used: &mut Vec<bool>, u: usize) -> usize {
    if u == adj.len() {
        return 0;
    }
    let mut best = max_matching_exhaustive(adj, used, u + 1);
    for &v in &adj[u] {
        if !used[v] {
            used[v] = true;
            best = best.max(1 + max_matching_exhaustive(adj, used, u + 1));
            used[v] = false;
        }
    }
    best
}

pub fn binary_from_mask(h: usize, w: usize, mask: u64) -> BinaryMap {
    BinaryMap::new(h, w, (0..h * w).map(|i| mask >> i & 1 == 1).collect()).unwrap()
}

/// Brute-force PR counts for one prediction at threshold `t` where each
/// annotator's matched prediction set is unambiguous (coincidence matching).
pub fn brute_counts_exact(conf: &[f64], gts: &[Vec<bool>], t: f64) -> (usize, usize, usize, usize) {
    let pred: Vec<bool> = conf.iter().map(|&c| c >= t).collect();
    let tp_pred = (0..pred.len()).filter(|&i| pred[i] && gts.iter().any(|g| g[i])).count();
    let fp = pred.iter().filter(|&&p| p).count() - tp_pred;
    let tp_gt: usize = gts
        .iter()
        .map(|g| (0..g.len()).filter(|&i| g[i] && pred[i]).count())
        .sum();
    let fn_: usize = gts.iter().map(|g| g.iter().filter(|&&b| b).count()).sum::<usize>() - tp_gt;
    (tp_pred, fp, tp_gt, fn_)
}

pub fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

pub fn f_of(c: (usize, usize, usize, usize)) -> f64 {
    f_measure(ratio(c.0, c.0 + c.1), ratio(c.2, c.2 + c.3))
}
