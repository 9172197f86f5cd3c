//! Per-slot discounting.

/// Present value of `x` realized `t` slots from now at per-slot rate `d`.
///
/// Total on `t >= 0`, `d >= 0`; `d = 0` leaves values undiscounted.
pub fn present_value(x: f64, t: u64, d: f64) -> f64 {
    x / growth(t, d)
}

/// `(1 + d)^t`.
pub(crate) fn growth(t: u64, d: f64) -> f64 {
    let base = 1.0 + d;
    match i32::try_from(t) {
        Ok(t) => base.powi(t),
        Err(_) => (t as f64 * d.ln_1p()).exp(),
    }
}

/// Discount factors `1 / (1 + d)^t` for a fixed rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountCurve {
    d: f64,
}

impl DiscountCurve {
    pub fn new(d: f64) -> crate::Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(crate::Error::invalid("d", format!("discount rate must be finite and >= 0, got {d}")));
        }
        Ok(Self { d })
    }

    pub fn rate(&self) -> f64 {
        self.d
    }

    pub fn factor(&self, t: u64) -> f64 {
        1.0 / growth(t, self.d)
    }

    pub fn present_value(&self, x: f64, t: u64) -> f64 {
        present_value(x, t, self.d)
    }
}
