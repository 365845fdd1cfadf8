//! JSON wire formats: the state specification consumed by the CLI and the
//! per-qubit settings document.
//!
//! State spec examples:
//! `{"n":4,"kind":"blocks","partition":[3,1],"blocks":[{"type":"ghz"},{"type":"basis","index":0}]}`
//! `{"n":2,"kind":"amplitudes","re":[1,0,0,1],"im":[0,0,0,0]}`
//! `{"kind":"mixture","components":[{"weight":0.5,"state":{...}},...]}`
//!
//! Settings: `{"qubits":[{"a":[x,y,z],"ap":[x,y,z]},...]}`.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::state::{
    basis, block_product, ghz, make_pure, random_pure, Direction, ProductState, PureState,
    QubitSettings, Settings, State,
};

/// One factor of a block-product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlockSpec {
    /// GHZ state on the whole block (Φ+ when the block has two qubits).
    Ghz,
    /// Computational basis state |index⟩.
    Basis {
        #[serde(default)]
        index: usize,
    },
    /// Explicit amplitudes; `im` defaults to zeros.
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
    /// Haar-random block, deterministic per seed.
    Haar { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: StateSpec,
}

/// Declarative state description, buildable into a [`State`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Block product shaped by a partition; parts must be non-increasing and
    /// blocks line up with parts by position.
    Blocks {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        partition: Vec<usize>,
        blocks: Vec<BlockSpec>,
    },
    /// Dense amplitudes; `im` defaults to zeros.
    Amplitudes {
        n: usize,
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
    /// Probabilistic mixture of non-mixture specs.
    Mixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        components: Vec<MixtureComponent>,
    },
}

fn build_amplitudes(n: usize, re: &[f64], im: &[f64]) -> Result<PureState> {
    if !im.is_empty() && im.len() != re.len() {
        return Err(Error::invalid(format!(
            "re has {} entries but im has {}",
            re.len(),
            im.len()
        )));
    }
    let amps: Vec<Complex64> = re
        .iter()
        .enumerate()
        .map(|(i, &r)| Complex64::new(r, im.get(i).copied().unwrap_or(0.0)))
        .collect();
    make_pure(n, amps)
}

fn build_block(spec: &BlockSpec, width: usize) -> Result<PureState> {
    match spec {
        BlockSpec::Ghz => ghz(width),
        BlockSpec::Basis { index } => basis(width, *index),
        BlockSpec::Amplitudes { re, im } => build_amplitudes(width, re, im),
        BlockSpec::Haar { seed } => random_pure(width, *seed),
    }
}

fn check_n(given: Option<usize>, actual: usize) -> Result<()> {
    if let Some(n) = given {
        if n != actual {
            return Err(Error::invalid(format!(
                "spec declares n={n} but describes {actual} qubits"
            )));
        }
    }
    Ok(())
}

impl StateSpec {
    fn build_product(&self) -> Result<ProductState> {
        match self {
            StateSpec::Blocks { n, partition, blocks } => {
                let p = Partition::new(partition.clone())?;
                if p.parts() != partition.as_slice() {
                    return Err(Error::invalid(
                        "partition parts must be listed non-increasing to line up with blocks",
                    ));
                }
                check_n(*n, p.n())?;
                if blocks.len() != p.parts().len() {
                    return Err(Error::invalid(format!(
                        "partition has {} parts but {} blocks given",
                        p.parts().len(),
                        blocks.len()
                    )));
                }
                let built = blocks
                    .iter()
                    .zip(p.parts())
                    .map(|(b, &k)| build_block(b, k))
                    .collect::<Result<Vec<_>>>()?;
                block_product(&p, built)
            }
            StateSpec::Amplitudes { n, re, im } => {
                Ok(ProductState::single(build_amplitudes(*n, re, im)?))
            }
            StateSpec::Mixture { .. } => {
                Err(Error::invalid("mixtures cannot nest inside mixtures"))
            }
        }
    }

    /// Materializes the spec.
    pub fn build(&self) -> Result<State> {
        match self {
            StateSpec::Blocks { .. } => Ok(State::Product(self.build_product()?)),
            StateSpec::Amplitudes { n, re, im } => {
                Ok(State::Pure(build_amplitudes(*n, re, im)?))
            }
            StateSpec::Mixture { n, components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.state.build_product()?)))
                    .collect::<Result<Vec<_>>>()?;
                let mixed = crate::state::mix_products(parts)?;
                check_n(*n, mixed.n())?;
                Ok(State::Mixed(mixed))
            }
        }
    }
}

/// Reads a state spec from JSON text and builds it.
pub fn state_from_json(text: &str) -> Result<State> {
    let spec: StateSpec =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad state JSON: {e}")))?;
    spec.build()
}

/// Reads settings from JSON text.
pub fn settings_from_json(text: &str) -> Result<Settings> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad settings JSON: {e}")))
}

#[derive(Serialize, Deserialize)]
struct QubitDoc {
    a: [f64; 3],
    ap: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SettingsDoc {
    qubits: Vec<QubitDoc>,
}

impl Serialize for Settings {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = SettingsDoc {
            qubits: self
                .qubits()
                .iter()
                .map(|q| QubitDoc {
                    a: [q.unprimed.x, q.unprimed.y, q.unprimed.z],
                    ap: [q.primed.x, q.primed.y, q.primed.z],
                })
                .collect(),
        };
        doc.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Settings {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = SettingsDoc::deserialize(deserializer)?;
        let qubits = doc
            .qubits
            .iter()
            .map(|q| {
                Ok(QubitSettings {
                    unprimed: Direction::new(q.a[0], q.a[1], q.a[2])
                        .map_err(|e| D::Error::custom(e.to_string()))?,
                    primed: Direction::new(q.ap[0], q.ap[1], q.ap[2])
                        .map_err(|e| D::Error::custom(e.to_string()))?,
                })
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        Settings::new(qubits).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify, ClassificationReport};
    use crate::optimizer::OptimizerConfig;
    use crate::state::{bell_phi_plus, tensor};

    #[test]
    fn block_spec_round_trip_and_build() {
        let text = r#"{"n":4,"kind":"blocks","partition":[3,1],
                       "blocks":[{"type":"ghz"},{"type":"basis","index":0}]}"#;
        let state = state_from_json(text).unwrap();
        assert_eq!(state.n(), 4);
        let State::Product(p) = &state else {
            panic!("expected product state")
        };
        let expected = tensor(&[ghz(3).unwrap(), basis(1, 0).unwrap()]).unwrap();
        assert_eq!(p.flatten().unwrap(), expected);
    }

    #[test]
    fn amplitudes_spec_builds_bell_state() {
        let text = r#"{"n":2,"kind":"amplitudes","re":[1,0,0,1]}"#;
        let State::Pure(s) = state_from_json(text).unwrap() else {
            panic!("expected pure state")
        };
        for (got, want) in s.amplitudes().iter().zip(bell_phi_plus().amplitudes()) {
            assert!((got - want).norm() <= 1e-15);
        }
    }

    #[test]
    fn mixture_spec_builds() {
        let text = r#"{"kind":"mixture","components":[
            {"weight":0.5,"state":{"n":2,"kind":"amplitudes","re":[1,0,0,1]}},
            {"weight":0.5,"state":{"n":2,"kind":"blocks","partition":[1,1],
                "blocks":[{"type":"basis"},{"type":"basis","index":1}]}}
        ]}"#;
        let State::Mixed(m) = state_from_json(text).unwrap() else {
            panic!("expected mixture")
        };
        assert_eq!(m.n(), 2);
        assert_eq!(m.components().len(), 2);
    }

    #[test]
    fn mixture_rejects_nesting_and_bad_n() {
        let nested = r#"{"kind":"mixture","components":[
            {"weight":1.0,"state":{"kind":"mixture","components":[
                {"weight":1.0,"state":{"n":1,"kind":"amplitudes","re":[1,0]}}]}}]}"#;
        assert!(state_from_json(nested).is_err());
        let bad_n = r#"{"n":3,"kind":"amplitudes","re":[1,0,0,1]}"#;
        assert!(state_from_json(bad_n).is_err());
    }

    #[test]
    fn blocks_must_align_with_partition_order() {
        let text = r#"{"kind":"blocks","partition":[1,3],
                       "blocks":[{"type":"basis"},{"type":"ghz"}]}"#;
        assert!(state_from_json(text).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"n":2,"kind":"amplitudes","re":[1,0,0,1],"imaginary":[0,0,0,0]}"#;
        assert!(state_from_json(text).is_err());
    }

    #[test]
    fn settings_round_trip() {
        let text = r#"{"qubits":[{"a":[1,0,0],"ap":[0,1,0]},{"a":[0,0,1],"ap":[0.6,0,0.8]}]}"#;
        let s = settings_from_json(text).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.qubit(0).unprimed, Direction::x_axis());
        let json = serde_json::to_string(&s).unwrap();
        let back = settings_from_json(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn settings_reject_long_directions() {
        let text = r#"{"qubits":[{"a":[1,1,0],"ap":[0,1,0]}]}"#;
        assert!(settings_from_json(text).is_err());
    }

    #[test]
    fn report_json_round_trips_losslessly() {
        let state = State::Pure(bell_phi_plus());
        let config = OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::default()
        };
        let report = classify(&state, &config, 1e-6).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: ClassificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
