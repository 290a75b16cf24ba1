use std::fmt::Write as _;

/// Sampled observables of a run. Optional columns are absent for runs that
/// cannot provide them (purity of a single trajectory, fidelity without a
/// target).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub sz: Vec<f64>,
    pub pol_re: Vec<f64>,
    pub pol_im: Vec<f64>,
    pub trace: Vec<f64>,
    pub purity: Option<Vec<f64>>,
    pub q_mean: Vec<f64>,
    pub leak: Vec<f64>,
    pub fidelity_pcs: Option<Vec<f64>>,
}

pub(crate) struct Sample {
    pub t: f64,
    pub sz: f64,
    pub pol_re: f64,
    pub pol_im: f64,
    pub trace: f64,
    pub purity: Option<f64>,
    pub q_mean: f64,
    pub leak: f64,
    pub fidelity: Option<f64>,
}

/// Shortest round-trip decimal form; `-0.0` is written as `0.0`.
pub(crate) fn num(v: f64) -> String {
    format!("{:?}", v + 0.0)
}

pub const CSV_HEADER: &str = "t,sz,pol_re,pol_im,trace,purity,q_mean,leak,fidelity_pcs";

impl ObservableSeries {
    pub(crate) fn with_columns(purity: bool, fidelity: bool) -> Self {
        Self {
            purity: purity.then(Vec::new),
            fidelity_pcs: fidelity.then(Vec::new),
            ..Self::default()
        }
    }

    pub(crate) fn push(&mut self, s: Sample) {
        debug_assert!(self.times.last().is_none_or(|&t| t < s.t));
        self.times.push(s.t);
        self.sz.push(s.sz);
        self.pol_re.push(s.pol_re);
        self.pol_im.push(s.pol_im);
        self.trace.push(s.trace);
        self.q_mean.push(s.q_mean);
        self.leak.push(s.leak);
        if let (Some(col), Some(v)) = (self.purity.as_mut(), s.purity) {
            col.push(v);
        }
        if let (Some(col), Some(v)) = (self.fidelity_pcs.as_mut(), s.fidelity) {
            col.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns `t,sz,pol_re,pol_im,trace,purity,q_mean,leak,fidelity_pcs`;
    /// absent optional columns are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let opt = |col: &Option<Vec<f64>>, k: usize| match col {
            Some(v) => num(v[k]),
            None => String::new(),
        };
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                num(self.times[k]),
                num(self.sz[k]),
                num(self.pol_re[k]),
                num(self.pol_im[k]),
                num(self.trace[k]),
                opt(&self.purity, k),
                num(self.q_mean[k]),
                num(self.leak[k]),
                opt(&self.fidelity_pcs, k),
            );
        }
        out
    }

    pub fn last_sz(&self) -> Option<f64> {
        self.sz.last().copied()
    }
}
