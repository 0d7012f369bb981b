//! Serializable output documents.
//!
//! Field order is fixed by the struct definitions and floats use the
//! shortest round-trip decimal, so identical configs produce byte-identical
//! JSON.

use modwave::criticality::{CriticalPoint, CurveTrace, ScanGrid};
use modwave::mkdv::DiagnosticsRow;
use modwave::models::TwoPhaseModel;
use modwave::reduction::{CrossChecks, ReductionCoefficients, TermComparison};
use modwave::tensors::{StepReport, TensorBundle};
use serde::Serialize;

#[derive(Serialize)]
pub struct TensorsDoc {
    pub model: String,
    pub params: serde_json::Value,
    pub k: [f64; 2],
    pub omega: [f64; 2],
    pub state: [f64; 2],
    pub physical: bool,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub dka: [[f64; 2]; 2],
    pub dwa: [[f64; 2]; 2],
    pub dkb: [[f64; 2]; 2],
    pub dwb: [[f64; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2kb: Option<[[[f64; 2]; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d3kb: Option<[[[[f64; 2]; 2]; 2]; 2]>,
    pub step_report: StepReport,
}

fn mat(m: &modwave::models::Mat2) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

impl TensorsDoc {
    pub fn new(model: &dyn TwoPhaseModel, pt: &modwave::models::ModelPoint, bu: &TensorBundle) -> Self {
        Self {
            model: model.name().to_string(),
            params: model.params_json(),
            k: [pt.k.x, pt.k.y],
            omega: [pt.omega.x, pt.omega.y],
            state: [pt.state.x, pt.state.y],
            physical: pt.physical,
            a: [bu.a.x, bu.a.y],
            b: [bu.b.x, bu.b.y],
            dka: mat(&bu.dka),
            dwa: mat(&bu.dwa),
            dkb: mat(&bu.dkb),
            dwb: mat(&bu.dwb),
            d2kb: bu.d2kb.map(|t| t.0),
            d3kb: bu.d3kb.map(|t| t.0),
            step_report: bu.step_report.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct ResidualsDoc {
    pub det: f64,
    pub cubic: f64,
    pub delta: f64,
}

#[derive(Serialize)]
pub struct CriticalPointDoc {
    pub model: String,
    pub params: serde_json::Value,
    pub slice_names: [String; 3],
    pub params_slice: [f64; 3],
    pub k: [f64; 2],
    pub omega: [f64; 2],
    pub state: [f64; 2],
    pub zeta: [f64; 2],
    pub delta: [f64; 2],
    pub residuals: ResidualsDoc,
    pub trace_eigenvalue_defect: f64,
}

impl CriticalPointDoc {
    pub fn new(model: &dyn TwoPhaseModel, cp: &CriticalPoint, trace_defect: f64) -> Self {
        let names = model.slice_names();
        Self {
            model: model.name().to_string(),
            params: model.params_json(),
            slice_names: [names[0].into(), names[1].into(), names[2].into()],
            params_slice: cp.params_slice,
            k: [cp.pt.k.x, cp.pt.k.y],
            omega: [cp.pt.omega.x, cp.pt.omega.y],
            state: [cp.pt.state.x, cp.pt.state.y],
            zeta: [cp.zeta.x, cp.zeta.y],
            delta: [cp.delta.x, cp.delta.y],
            residuals: ResidualsDoc {
                det: cp.residuals.det,
                cubic: cp.residuals.cubic,
                delta: cp.residuals.delta,
            },
            trace_eigenvalue_defect: trace_defect,
        }
    }
}

#[derive(Serialize)]
pub struct TracePointDoc {
    pub s: f64,
    pub params_slice: [f64; 3],
    pub k: [f64; 2],
    pub omega: [f64; 2],
    pub residuals: ResidualsDoc,
}

#[derive(Serialize)]
pub struct TraceDoc {
    pub model: String,
    pub params: serde_json::Value,
    pub slice_names: [String; 3],
    pub stopping: String,
    pub points: Vec<TracePointDoc>,
}

impl TraceDoc {
    pub fn new(model: &dyn TwoPhaseModel, tr: &CurveTrace) -> Self {
        let names = model.slice_names();
        Self {
            model: model.name().to_string(),
            params: model.params_json(),
            slice_names: [names[0].into(), names[1].into(), names[2].into()],
            stopping: tr.stopping.as_str().to_string(),
            points: tr
                .points
                .iter()
                .zip(tr.arclength.iter())
                .map(|(p, &s)| TracePointDoc {
                    s,
                    params_slice: p.params_slice,
                    k: [p.pt.k.x, p.pt.k.y],
                    omega: [p.pt.omega.x, p.pt.omega.y],
                    residuals: ResidualsDoc {
                        det: p.residuals.det,
                        cubic: p.residuals.cubic,
                        delta: p.residuals.delta,
                    },
                })
                .collect(),
        }
    }

    /// CSV with the documented column set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,p1,p2,p3,k1,k2,w1,w2,res_det,res_cubic,res_delta\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                p.s,
                p.params_slice[0],
                p.params_slice[1],
                p.params_slice[2],
                p.k[0],
                p.k[1],
                p.omega[0],
                p.omega[1],
                p.residuals.det,
                p.residuals.cubic,
                p.residuals.delta
            ));
        }
        out
    }
}

#[derive(Serialize)]
pub struct ScanNodeDoc {
    pub index: [usize; 3],
    pub params: [f64; 3],
    pub det: Option<f64>,
    pub cubic: Option<f64>,
    pub physical: bool,
}

#[derive(Serialize)]
pub struct ScanDoc {
    pub model: String,
    pub params: serde_json::Value,
    pub slice_names: [String; 3],
    pub axes: [Vec<f64>; 3],
    pub nodes: Vec<ScanNodeDoc>,
}

impl ScanDoc {
    pub fn new(model: &dyn TwoPhaseModel, grid: &ScanGrid) -> Self {
        Self {
            model: model.name().to_string(),
            params: model.params_json(),
            slice_names: [
                grid.names[0].into(),
                grid.names[1].into(),
                grid.names[2].into(),
            ],
            axes: grid.axes.clone(),
            nodes: grid
                .nodes
                .iter()
                .map(|n| ScanNodeDoc {
                    index: n.index,
                    params: n.params,
                    det: n.det,
                    cubic: n.cubic,
                    physical: n.physical,
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p1,p2,p3,det,cubic,physical\n");
        for n in &self.nodes {
            let det = n.det.map(|v| v.to_string()).unwrap_or_default();
            let cubic = n.cubic.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                n.params[0], n.params[1], n.params[2], det, cubic, n.physical
            ));
        }
        out
    }
}

#[derive(Serialize)]
pub struct RawCoefficientsDoc {
    pub a0_raw: f64,
    pub a1_raw: f64,
    pub a2_raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2_raw_variant: Option<f64>,
}

#[derive(Serialize)]
pub struct NormalizedCoefficientsDoc {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

#[derive(Serialize)]
pub struct GaugeDoc {
    pub zeta_scale: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Serialize)]
pub struct CrossChecksDoc {
    pub kuramoto_cubic: f64,
    pub two_a1_raw: f64,
    pub kuramoto_rel_mismatch: f64,
    pub stationarity_first: f64,
    pub stationarity_second: f64,
    pub flux_scale: f64,
}

impl From<&CrossChecks> for CrossChecksDoc {
    fn from(c: &CrossChecks) -> Self {
        Self {
            kuramoto_cubic: c.kuramoto_cubic,
            two_a1_raw: c.two_a1_raw,
            kuramoto_rel_mismatch: c.kuramoto_rel_mismatch,
            stationarity_first: c.stationarity_first,
            stationarity_second: c.stationarity_second,
            flux_scale: c.flux_scale,
        }
    }
}

#[derive(Serialize)]
pub struct ComparisonRowDoc {
    pub term: String,
    pub toolkit: f64,
    pub reference: f64,
    pub rel_mismatch: f64,
}

#[derive(Serialize)]
pub struct SimulationSummaryDoc {
    pub l: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub shape_error: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub energy_drift: f64,
}

#[derive(Serialize)]
pub struct CoeffsDoc {
    pub point: CriticalPointDoc,
    pub raw: RawCoefficientsDoc,
    pub normalized: NormalizedCoefficientsDoc,
    pub gauge: GaugeDoc,
    /// "sech" when a1_raw/a2_raw > 0 (the sech soliton family of the
    /// reduced equation exists), otherwise "none".
    pub soliton_branch: String,
    pub cross_checks: CrossChecksDoc,
    pub comparison: Vec<ComparisonRowDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummaryDoc>,
}

impl CoeffsDoc {
    pub fn new(
        point: CriticalPointDoc,
        rc: &ReductionCoefficients,
        checks: &CrossChecks,
        comparison: &[TermComparison],
    ) -> Self {
        Self {
            point,
            raw: RawCoefficientsDoc {
                a0_raw: rc.a0_raw,
                a1_raw: rc.a1_raw,
                a2_raw: rc.a2_raw,
                a2_raw_variant: rc.a2_raw_variant,
            },
            normalized: NormalizedCoefficientsDoc {
                a0: rc.a0,
                a1: rc.a1,
                a2: rc.a2,
            },
            gauge: GaugeDoc {
                zeta_scale: rc.gauge.zeta_scale,
                f0: rc.gauge.f0,
                f1: rc.gauge.f1,
                f2: rc.gauge.f2,
            },
            soliton_branch: if rc.a1_raw / rc.a2_raw > 0.0 {
                "sech".to_string()
            } else {
                "none".to_string()
            },
            cross_checks: checks.into(),
            comparison: comparison
                .iter()
                .map(|r| ComparisonRowDoc {
                    term: r.term.to_string(),
                    toolkit: r.toolkit,
                    reference: r.reference,
                    rel_mismatch: r.rel_mismatch,
                })
                .collect(),
            simulation: None,
        }
    }
}

#[derive(Serialize)]
pub struct KuramotoDoc {
    pub model: String,
    pub params: serde_json::Value,
    pub params_slice: [f64; 3],
    pub kuramoto_cubic: f64,
    pub two_a1_raw: f64,
    pub rel_mismatch: f64,
    pub stationarity_first: f64,
    pub stationarity_second: f64,
}

#[derive(Serialize)]
pub struct FrameDoc {
    pub time: f64,
    pub q: Vec<f64>,
}

#[derive(Serialize)]
pub struct SimulateDoc {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub l: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub ic: String,
    pub snap_every: usize,
    pub frames: Vec<FrameDoc>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

pub fn to_json_string<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serialization cannot fail");
    s.push('\n');
    s
}
