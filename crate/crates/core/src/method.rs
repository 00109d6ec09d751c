//! Named detection methods with a uniform raw-image entry point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::{canny, log_detector, prewitt, roberts, sobel, zerocross, CannyParams, DEFAULT_LOG_SIGMA};
use crate::edgemap::EdgeMap;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::pipeline::{detect_hybrid, prepare_image, HybridDetector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sobel,
    Prewitt,
    Roberts,
    Log,
    Zerocross,
    Canny,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sobel,
        Method::Prewitt,
        Method::Roberts,
        Method::Log,
        Method::Zerocross,
        Method::Canny,
        Method::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sobel => "sobel",
            Method::Prewitt => "prewitt",
            Method::Roberts => "roberts",
            Method::Log => "log",
            Method::Zerocross => "zerocross",
            Method::Canny => "canny",
            Method::Hybrid => "hybrid",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Sobel => "Sobel",
            Method::Prewitt => "Prewitt",
            Method::Roberts => "Roberts",
            Method::Log => "LoG",
            Method::Zerocross => "Zero-crossing",
            Method::Canny => "Canny",
            Method::Hybrid => "Hybrid CNN+SVM",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::arg(format!(
                    "unknown method '{s}'; valid methods: {}",
                    Method::valid_names()
                ))
            })
    }
}

/// A ready-to-run detector.
#[derive(Debug, Clone)]
pub enum Detector {
    Classical { method: Method, canny: CannyParams },
    Hybrid(Box<HybridDetector>),
}

impl Detector {
    pub fn classical(method: Method) -> Result<Self> {
        if method == Method::Hybrid {
            return Err(Error::arg("the hybrid method needs a trained bundle"));
        }
        Ok(Detector::Classical {
            method,
            canny: CannyParams::default(),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Detector::Classical { method, .. } => *method,
            Detector::Hybrid(_) => Method::Hybrid,
        }
    }

    /// Resize to the working size, normalize, and run the method.
    pub fn detect(&self, img: &GrayImage) -> Result<EdgeMap> {
        match self {
            Detector::Hybrid(det) => detect_hybrid(det, img),
            Detector::Classical { method, canny: params } => {
                let p = prepare_image(img)?;
                match method {
                    Method::Sobel => sobel(&p),
                    Method::Prewitt => prewitt(&p),
                    Method::Roberts => roberts(&p),
                    Method::Log => log_detector(&p, DEFAULT_LOG_SIGMA),
                    Method::Zerocross => zerocross(&p, None),
                    Method::Canny => canny(&p, params),
                    Method::Hybrid => unreachable!("hybrid is never classical"),
                }
            }
        }
    }
}
