//! Pass/warn/fail checks of a configuration against the conditions of the
//! limit theory.

use serde::Serialize;

use crate::asymptotics::gamma_proxy;
use crate::kde::bandwidth_proxy;
use crate::kernel::{validate_kernel, Kernel};
use crate::models::DensityModel;

/// `n·h/ln n` below this fails outright; below 10 it warns.
pub const BANDWIDTH_PROXY_FAIL: f64 = 3.0;
pub const BANDWIDTH_PROXY_WARN: f64 = 10.0;
/// The `γ` proxy `√(n h^{1+2/d})` above this warns.
pub const GAMMA_PROXY_WARN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub assumption: &'static str,
    pub status: Status,
    pub detail: String,
}

/// Kernel shape, bandwidth rate, `γ` proxy and level window for one
/// configuration.
pub fn check_configuration(model: &dyn DensityModel, kernel: &Kernel, n: usize, h: f64, c: f64) -> Vec<Check> {
    let mut out = Vec::new();
    let violations = validate_kernel(kernel);
    for name in ["kernel support", "kernel bounded", "kernel nonnegative", "kernel mass", "kernel first moment"] {
        match violations.iter().find(|v| v.assumption == name) {
            Some(v) => out.push(Check { assumption: name, status: Status::Fail, detail: v.detail.clone() }),
            None => out.push(Check { assumption: name, status: Status::Pass, detail: "ok".into() }),
        }
    }

    let proxy = bandwidth_proxy(n, h);
    let status = if !(proxy >= BANDWIDTH_PROXY_FAIL) {
        Status::Fail
    } else if proxy < BANDWIDTH_PROXY_WARN {
        Status::Warn
    } else {
        Status::Pass
    };
    out.push(Check { assumption: "bandwidth rate", status, detail: format!("n·h/ln n = {proxy:.4}") });

    let gamma = gamma_proxy(n as f64, h, model.dim());
    let status = if gamma <= GAMMA_PROXY_WARN { Status::Pass } else { Status::Warn };
    let detail = if model.dim() == 1 {
        format!("√(n h³) = {gamma:.4}; the limit must be 0 in d = 1")
    } else {
        format!("√(n h^(1+2/d)) = {gamma:.4}")
    };
    out.push(Check { assumption: "bandwidth gamma", status, detail });

    let sup = model.sup_density();
    let in_window = c > 0.0 && c < sup;
    out.push(Check {
        assumption: "level window",
        status: if in_window { Status::Pass } else { Status::Fail },
        detail: format!("c = {c:.6} against (0, sup f = {sup:.6})"),
    });
    if in_window {
        let check = match model.geometry(c) {
            Ok(g) if g.min_slope() > 0.0 => {
                Check { assumption: "boundary slope", status: Status::Pass, detail: format!("min |∇f| on the boundary = {:.6}", g.min_slope()) }
            }
            Ok(g) => Check {
                assumption: "boundary slope",
                status: Status::Fail,
                detail: format!("min |∇f| on the boundary = {}", g.min_slope()),
            },
            Err(e) => Check { assumption: "boundary slope", status: Status::Warn, detail: format!("not checked: {e}") },
        };
        out.push(check);
    }
    out
}

/// The worst status in a table.
pub fn overall(checks: &[Check]) -> Status {
    checks.iter().map(|c| c.status).fold(Status::Pass, |a, b| match (a, b) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Warn, _) | (_, Status::Warn) => Status::Warn,
        _ => Status::Pass,
    })
}
