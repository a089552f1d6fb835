//! Trajectory CSV and metrics-record files.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which reads
//! back to the identical `f64`.

use std::path::{Path, PathBuf};

use crate::dynamics::{BaseReaction, JointState};
use crate::kinematics::JointConfig;
use crate::platform::PlatformState;
use crate::simulate::{JointRecord, JointTrajectory, PlatformTrajectory};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn joint_csv_header(actuators: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t_s",
        "phi_rad",
        "theta_rad",
        "phidot_rad_s",
        "thetadot_rad_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=actuators).map(|i| format!("P{i}_pa")));
    h.push("tau_base_Nm".into());
    h.push("f_base_N".into());
    h
}

pub const PLATFORM_CSV_HEADER: [&str; 6] = [
    "t_s",
    "alpha_rad",
    "beta_rad",
    "alphadot_rad_s",
    "betadot_rad_s",
    "tau_Nm",
];

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_float(*v)))
            .map_err(csv_error(path))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    std::fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rows(path: &Path, expected: &[String]) -> Result<Vec<Vec<f64>>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_error(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected {
        return Err(IoError::Schema {
            path: path.to_path_buf(),
            message: format!(
                "expected columns {}, found {}",
                expected.join(","),
                header.join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error(path))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Schema {
                path: path.to_path_buf(),
                message: format!("bad number: {e}"),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a joint trajectory CSV with `actuators` pressure columns.
pub fn write_joint_csv(
    path: &Path,
    traj: &JointTrajectory,
    actuators: usize,
) -> Result<(), IoError> {
    if let Some(k) = traj
        .inputs
        .iter()
        .position(|r| r.pressures.len() != actuators)
    {
        return Err(IoError::Schema {
            path: path.to_path_buf(),
            message: format!(
                "sample {k} has {} pressures, expected {actuators}",
                traj.inputs[k].pressures.len()
            ),
        });
    }
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.inputs)
        .map(|((t, s), r)| {
            let mut row = vec![*t, s.q.phi, s.q.theta, s.qdot[0], s.qdot[1]];
            row.extend(&r.pressures);
            row.push(r.reaction.torque);
            row.push(r.reaction.force);
            row
        });
    write_rows(path, &joint_csv_header(actuators), rows)
}

/// Reads a joint trajectory CSV. Accelerations are not part of the file
/// and come back as zero.
pub fn read_joint_csv(path: &Path, actuators: usize) -> Result<JointTrajectory, IoError> {
    let rows = read_rows(path, &joint_csv_header(actuators))?;
    let mut traj = JointTrajectory::with_capacity(rows.len());
    for row in rows {
        let state = JointState {
            q: JointConfig {
                phi: row[1],
                theta: row[2],
            },
            qdot: [row[3], row[4]],
        };
        let record = JointRecord {
            pressures: row[5..5 + actuators].to_vec(),
            qddot: [0.0; 2],
            reaction: BaseReaction {
                torque: row[5 + actuators],
                force: row[6 + actuators],
            },
        };
        traj.push(row[0], state, record);
    }
    Ok(traj)
}

pub fn write_platform_csv(path: &Path, traj: &PlatformTrajectory) -> Result<(), IoError> {
    let header: Vec<String> = PLATFORM_CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.inputs)
        .map(|((t, s), tau)| vec![*t, s.alpha, s.beta, s.alphadot, s.betadot, *tau]);
    write_rows(path, &header, rows)
}

pub fn read_platform_csv(path: &Path) -> Result<PlatformTrajectory, IoError> {
    let header: Vec<String> = PLATFORM_CSV_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = read_rows(path, &header)?;
    let mut traj = PlatformTrajectory::with_capacity(rows.len());
    for row in rows {
        let state = PlatformState {
            alpha: row[1],
            beta: row[2],
            alphadot: row[3],
            betadot: row[4],
        };
        traj.push(row[0], state, row[5]);
    }
    Ok(traj)
}

/// One flat key-value record of a metrics file.
pub type Record = toml::Table;

#[derive(Debug, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsFile {
    #[serde(default)]
    record: Vec<Record>,
}

pub fn write_metrics(path: &Path, records: &[Record]) -> Result<(), IoError> {
    let file = MetricsFile {
        record: records.to_vec(),
    };
    let text = toml::to_string(&file).expect("flat records serialise");
    std::fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a metrics file. Every record must be flat, with string `kind` and
/// `group` keys.
pub fn read_metrics(path: &Path) -> Result<Vec<Record>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: MetricsFile = toml::from_str(&text).map_err(|source| IoError::Toml {
        path: path.to_path_buf(),
        source,
    })?;
    for (i, rec) in file.record.iter().enumerate() {
        let schema = |message: String| IoError::Schema {
            path: path.to_path_buf(),
            message,
        };
        for key in ["kind", "group"] {
            if !rec.get(key).is_some_and(|v| v.is_str()) {
                return Err(schema(format!("record {i} lacks a string `{key}`")));
            }
        }
        if let Some((k, _)) = rec.iter().find(|(_, v)| v.is_table() || v.is_array()) {
            return Err(schema(format!("record {i}: `{k}` is not a flat value")));
        }
    }
    Ok(file.record)
}

/// Numeric value of `key`, accepting TOML integers.
pub fn number(record: &Record, key: &str) -> Option<f64> {
    match record.get(key)? {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn header_matches_schema() {
        assert_eq!(
            joint_csv_header(5).join(","),
            "t_s,phi_rad,theta_rad,phidot_rad_s,thetadot_rad_s,P1_pa,P2_pa,P3_pa,P4_pa,P5_pa,tau_base_Nm,f_base_N"
        );
        assert_eq!(
            PLATFORM_CSV_HEADER.join(","),
            "t_s,alpha_rad,beta_rad,alphadot_rad_s,betadot_rad_s,tau_Nm"
        );
    }

    #[test]
    fn wrong_header_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_platform_csv(&p), Err(IoError::Schema { .. })));
    }

    #[test]
    fn metrics_round_trip_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        let mut r = Record::new();
        r.insert("kind".into(), "maneuver".into());
        r.insert("group".into(), "g".into());
        r.insert("v_peak_deg_s".into(), 1.0e3.into());
        write_metrics(&p, &[r.clone(), r.clone()]).unwrap();
        assert_eq!(read_metrics(&p).unwrap(), vec![r.clone(), r]);

        std::fs::write(&p, "[[record]]\nkind = \"x\"\n").unwrap();
        assert!(matches!(read_metrics(&p), Err(IoError::Schema { .. })));
        std::fs::write(
            &p,
            "[[record]]\nkind = \"x\"\ngroup = \"g\"\nbad = [1, 2]\n",
        )
        .unwrap();
        assert!(matches!(read_metrics(&p), Err(IoError::Schema { .. })));
    }
}
