//! Machine-readable reports: JSON documents with a stable key order and a
//! schema version, written atomically, plus the CSV trajectory export.
//! Exact scalars serialize as `num/den` strings; floats as shortest
//! round-trip decimals. Reports are byte-identical across runs with the
//! same seed, except for the `generated_at` field.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::dynamics::Trajectory;
use crate::rep::{Family, RepData, RepSpec};
use crate::scalar::Rat;

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of the representation spec a command ran against.
#[derive(Debug, Clone, Serialize)]
pub struct SpecEcho {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    pub field: String,
    pub center: bool,
}

impl SpecEcho {
    pub fn of(spec: RepSpec) -> Self {
        let (family, p, q, n) = match spec.family {
            Family::TensorReal { p, q } => ("tensor-real", Some(p), Some(q), None),
            Family::TensorComplex { n } => ("tensor-complex", None, None, Some(n)),
            Family::BinaryCubic { .. } => ("binary-cubic", None, None, None),
            Family::BinaryQuadratic { .. } => ("binary-quadratic", None, None, None),
        };
        SpecEcho {
            family: family.to_string(),
            p,
            q,
            n,
            field: if spec.is_complex() { "complex" } else { "real" }.to_string(),
            center: spec.include_center,
        }
    }
}

/// One asserted quantity: its name, whether it passed, and the residual or
/// exactness marker that backs the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn exact(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let detail = detail.into();
        CheckLine {
            name: name.into(),
            passed,
            detail: format!("exact; {detail}"),
        }
    }

    pub fn residual(name: impl Into<String>, passed: bool, residual: f64, tol: f64) -> Self {
        CheckLine {
            name: name.into(),
            passed,
            detail: format!("residual {residual:e} (tolerance {tol:e})"),
        }
    }
}

/// Provenance block attached to every report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub basis_ordering: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(rep: Option<&RepData>, seed: u64) -> Self {
        let basis_ordering = match rep {
            Some(rep) => format!(
                "g: [{}]; V: [{}]; Lambda^2 V*: lexicographic pairs; S^2 g: pairs i <= j",
                rep.g_labels.join(", "),
                rep.v_labels.join(", ")
            ),
            None => "none (no representation involved)".to_string(),
        };
        Provenance {
            basis_ordering,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Generic command report. Struct fields serialize in declaration order;
/// the `values` map is sorted by key. Both are deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecEcho>,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub values: BTreeMap<String, Value>,
    pub provenance: Provenance,
    pub generated_at: String,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        spec: Option<SpecEcho>,
        checks: Vec<CheckLine>,
        values: BTreeMap<String, Value>,
        provenance: Provenance,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            spec,
            passed,
            checks,
            values,
            provenance,
            generated_at: timestamp(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON body with the timestamp stripped: the determinism contract.
    pub fn to_canonical_json(&self) -> String {
        let mut clone = self.clone();
        clone.generated_at = String::new();
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

/// Serializes an exact scalar for a report value.
pub fn rat_value(r: &Rat) -> Value {
    Value::String(r.to_string_exact())
}

/// Atomic write: temp file in the same directory, then rename.
pub fn emit_report(report: &Report, path: &Path) -> io::Result<()> {
    write_atomic(path, report.to_json().as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// CSV trajectory export. The header row records the seed and termination
/// reason; columns are t, a-components, b-components (with `_re`/`_im`
/// suffixes for complex specs), the monitored invariants, and a final flag
/// column marking the escaped sample of a blown-up trajectory.
pub fn export_trajectory(
    traj: &Trajectory,
    rep: &RepData,
    seed: u64,
    path: &Path,
) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# schema=trajectory-v1 seed={} termination={}\n",
        seed,
        traj.termination.label()
    ));
    let complex = rep.spec.is_complex();
    let mut cols: Vec<String> = vec!["t".to_string()];
    let mut push_cols = |prefix: &str, count: usize| {
        for i in 0..count {
            if complex {
                cols.push(format!("{prefix}{}_re", i + 1));
                cols.push(format!("{prefix}{}_im", i + 1));
            } else {
                cols.push(format!("{prefix}{}", i + 1));
            }
        }
    };
    push_cols("a", rep.dim_g);
    push_cols("b", rep.dim_v);
    for (name, _) in &traj.monitors {
        cols.push(name.clone());
    }
    cols.push("flag".to_string());
    out.push_str(&cols.join(","));
    out.push('\n');

    let blow_up = traj.termination.blow_up_time().is_some();
    let last = traj.times.len().saturating_sub(1);
    for (i, t) in traj.times.iter().enumerate() {
        let mut row: Vec<String> = vec![format!("{t}")];
        for z in &traj.states[i] {
            row.push(format!("{}", z.re));
            if complex {
                row.push(format!("{}", z.im));
            }
        }
        for (_, series) in &traj.monitors {
            row.push(format!("{}", series[i]));
        }
        row.push(if blow_up && i == last {
            "escaped".to_string()
        } else {
            String::new()
        });
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{C64, Termination};
    use crate::rep::rep_data;

    #[test]
    fn report_is_deterministic_modulo_timestamp() {
        let rep = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        let build = || {
            let mut values = BTreeMap::new();
            values.insert("dim_K".to_string(), Value::from(6));
            values.insert("ratio".to_string(), rat_value(&Rat::new(3, 4)));
            Report::new(
                "dims",
                Some(SpecEcho::of(rep.spec)),
                vec![CheckLine::exact("dim_K == dim_g", true, "6 == 6")],
                values,
                Provenance::new(Some(&rep), 7),
            )
        };
        let a = build();
        let b = build();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        assert!(a.to_json().contains("\"3/4\""));
        assert!(a.to_json().contains("\"schema_version\": 1"));
    }

    #[test]
    fn emit_report_writes_atomically() {
        let rep = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        let report = Report::new(
            "dims",
            Some(SpecEcho::of(rep.spec)),
            vec![],
            BTreeMap::new(),
            Provenance::new(Some(&rep), 0),
        );
        let dir = std::env::temp_dir().join("holonomy-lab-report-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        emit_report(&report, &path).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert!(body.contains("\"command\": \"dims\""));
        assert!(!path.with_extension("tmp").exists());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_export_flags_blow_up_and_keeps_header() {
        let rep = rep_data(RepSpec::tensor_real(2, 1)).unwrap();
        let dim_w = rep.dim_g + rep.dim_v;
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![C64::new(1.0, 0.0); dim_w]; 2],
            steps: vec![0.5],
            termination: Termination::BlowUp { time: 0.5 },
            monitors: vec![("rank".to_string(), vec![4.0, 4.0])],
        };
        let dir = std::env::temp_dir().join("holonomy-lab-csv-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("traj.csv");
        export_trajectory(&traj, &rep, 99, &path).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert!(lines[0].contains("seed=99"));
        assert!(lines[0].contains("termination=blow-up"));
        assert!(lines[1].starts_with("t,a1,"));
        assert!(lines[1].ends_with(",rank,flag"));
        assert!(lines[3].ends_with(",escaped"));

        // Header-only file for an empty trajectory.
        let empty = Trajectory {
            times: vec![],
            states: vec![],
            steps: vec![],
            termination: Termination::TimeLimit,
            monitors: vec![],
        };
        let path2 = dir.join("empty.csv");
        export_trajectory(&empty, &rep, 1, &path2).unwrap();
        let body2 = fs::read_to_string(&path2).unwrap();
        assert_eq!(body2.lines().count(), 2);
        fs::remove_dir_all(&dir).ok();
    }
}
