//! Size caps for the expensive operations.
//!
//! `CSL_CAP_OVERRIDE=<factor>` multiplies every cap by an integer factor.
//! Raising caps is unsafe in the sense that memory and runtime grow without
//! further checks.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const CAP_OVERRIDE_ENV: &str = "CSL_CAP_OVERRIDE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub dense: usize,
    pub eigen_dirichlet: usize,
    pub eigen_periodic: usize,
    pub partition: u64,
    pub exhaustive: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            dense: 4096,
            eigen_dirichlet: 8192,
            eigen_periodic: 4096,
            partition: 100_000,
            exhaustive: 10_000,
        }
    }
}

impl Caps {
    pub fn scaled(factor: u64) -> Self {
        let d = Caps::default();
        let f = factor.max(1);
        Caps {
            dense: d.dense * f as usize,
            eigen_dirichlet: d.eigen_dirichlet * f as usize,
            eigen_periodic: d.eigen_periodic * f as usize,
            partition: d.partition * f,
            exhaustive: d.exhaustive * f,
        }
    }

    /// Caps in effect for this process, read once from the environment.
    pub fn global() -> &'static Caps {
        static CAPS: OnceLock<Caps> = OnceLock::new();
        CAPS.get_or_init(|| {
            let factor = std::env::var(CAP_OVERRIDE_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<u64>().ok())
                .unwrap_or(1);
            Caps::scaled(factor)
        })
    }
}

pub(crate) fn check_cap(what: &'static str, value: u128, cap: u128) -> Result<()> {
    if value > cap {
        Err(Error::CapExceeded { what, value, cap })
    } else {
        Ok(())
    }
}
