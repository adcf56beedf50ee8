//! World model of the lab workspace.
//!
//! A [`Workspace`] holds vessels, devices and obstacles with exact poses,
//! loaded from a JSON scene file. Values are immutable after construction;
//! [`apply_effect`] returns a new workspace.

mod transform;

pub use transform::{wrap_angle, Transform};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ambient lab temperature [°C] assumed when a vessel sits on no device.
pub const AMBIENT_TEMP_C: f64 = 25.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scene parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("vessel `{id}`: capacity exceeded ({volume_ml:.1} mL > {capacity_ml:.1} mL)")]
    CapacityExceeded {
        id: String,
        volume_ml: f64,
        capacity_ml: f64,
    },
    #[error("vessel `{id}`: negative mass for `{species}`")]
    NegativeMass { id: String, species: String },
    #[error("device `{id}`: {message}")]
    InvalidDevice { id: String, message: String },
    #[error("obstacle `{id}`: {message}")]
    InvalidObstacle { id: String, message: String },
    #[error("pose for `{id}` is not a proper rotation (defect {defect:.2e})")]
    InvalidPose { id: String, defect: f64 },
    #[error("vessel `{id}`: insufficient contents of `{species}` ({have:.3} g < {want:.3} g)")]
    InsufficientContents {
        id: String,
        species: String,
        have: f64,
        want: f64,
    },
    #[error("vessel `{0}` is empty")]
    EmptyVessel(String),
    #[error("density for `{0}` must be positive")]
    InvalidDensity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VesselKind {
    Beaker,
    Dish,
    Vial,
}

impl VesselKind {
    /// Bounding-capsule radius [m] used for collision checks.
    pub fn collision_radius(self) -> f64 {
        match self {
            VesselKind::Beaker => 0.035,
            VesselKind::Dish => 0.060,
            VesselKind::Vial => 0.012,
        }
    }

    /// Height [m] of the collision capsule axis.
    pub fn height(self) -> f64 {
        match self {
            VesselKind::Beaker => 0.09,
            VesselKind::Dish => 0.025,
            VesselKind::Vial => 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Liquid,
    Granular,
    Dissolved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Content {
    pub species: String,
    pub mass_g: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselState {
    pub id: String,
    pub kind: VesselKind,
    pub pose: Transform,
    pub capacity_ml: f64,
    #[serde(default)]
    pub contents: Vec<Content>,
    #[serde(default = "default_true")]
    pub graspable: bool,
}

fn default_true() -> bool {
    true
}

impl VesselState {
    /// Mass of one species [g], summed over phases.
    pub fn species_mass(&self, species: &str) -> f64 {
        self.contents
            .iter()
            .filter(|c| c.species == species)
            .map(|c| c.mass_g)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.contents.iter().map(|c| c.mass_g).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_mass() <= 1e-12
    }

    /// Content volume [mL] given per-species densities [g/mL]; unlisted
    /// species default to 1 g/mL.
    pub fn content_volume_ml(&self, densities: &BTreeMap<String, f64>) -> f64 {
        self.contents
            .iter()
            .map(|c| c.mass_g / densities.get(&c.species).copied().unwrap_or(1.0))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Scale,
    HotplateStirrer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceState {
    pub id: String,
    pub kind: DeviceKind,
    pub pose: Transform,
    #[serde(default)]
    pub reading_g: f64,
    #[serde(default = "default_ambient")]
    pub temp_setpoint_c: f64,
    #[serde(default = "default_ambient")]
    pub temp_actual_c: f64,
    #[serde(default)]
    pub stirring: bool,
}

fn default_ambient() -> f64 {
    AMBIENT_TEMP_C
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Box {
        id: String,
        min: [f64; 3],
        max: [f64; 3],
    },
    Sphere {
        id: String,
        center: [f64; 3],
        radius: f64,
    },
}

impl Obstacle {
    pub fn id(&self) -> &str {
        match self {
            Obstacle::Box { id, .. } | Obstacle::Sphere { id, .. } => id,
        }
    }
}

/// Immutable snapshot of the lab workspace.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub vessels: BTreeMap<String, VesselState>,
    pub devices: BTreeMap<String, DeviceState>,
    pub obstacles: Vec<Obstacle>,
    pub robot_base: Transform,
    /// Species densities [g/mL]; anything unlisted is 1 g/mL (water).
    pub densities: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneWire {
    #[serde(default)]
    vessels: Vec<VesselState>,
    #[serde(default)]
    devices: Vec<DeviceState>,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
    #[serde(default)]
    robot_base: Transform,
    #[serde(default)]
    densities: BTreeMap<String, f64>,
}

/// Symbolic state change produced by plan execution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    /// Vessel set down at a new pose (covers pick-up/put-down pose changes).
    Place { vessel: String, pose: Transform },
    /// Mass transfer of one species between vessels.
    Pour {
        from: String,
        to: String,
        species: String,
        mass_g: f64,
    },
    /// Hotplate setpoint change; `actual` tracks immediately in simulation.
    SetTemperature { device: String, celsius: f64 },
    SetStirring { device: String, on: bool },
}

impl Workspace {
    pub fn vessel(&self, id: &str) -> Result<&VesselState, SceneError> {
        self.vessels
            .get(id)
            .ok_or_else(|| SceneError::UnknownId(id.to_string()))
    }

    pub fn device(&self, id: &str) -> Result<&DeviceState, SceneError> {
        self.devices
            .get(id)
            .ok_or_else(|| SceneError::UnknownId(id.to_string()))
    }

    /// Device the vessel rests on, judged by horizontal proximity.
    pub fn supporting_device(&self, vessel_id: &str) -> Option<&DeviceState> {
        let vessel = self.vessels.get(vessel_id)?;
        self.devices.values().find(|d| {
            let dv = vessel.pose.translation - d.pose.translation;
            dv.xy().norm() < 0.10 && dv.z >= -0.01 && dv.z < 0.15
        })
    }

    /// Temperature [°C] seen by a vessel: its hotplate's actual
    /// temperature, or ambient.
    pub fn vessel_temperature_c(&self, vessel_id: &str) -> f64 {
        self.supporting_device(vessel_id)
            .filter(|d| d.kind == DeviceKind::HotplateStirrer)
            .map(|d| d.temp_actual_c)
            .unwrap_or(AMBIENT_TEMP_C)
    }

    /// Total mass of `species` across all vessels [g].
    pub fn total_species_mass(&self, species: &str) -> f64 {
        self.vessels.values().map(|v| v.species_mass(species)).sum()
    }

    pub fn density(&self, species: &str) -> f64 {
        self.densities.get(species).copied().unwrap_or(1.0)
    }

    fn validate(&self) -> Result<(), SceneError> {
        let mut seen = std::collections::BTreeSet::new();
        for id in self
            .vessels
            .keys()
            .chain(self.devices.keys())
            .map(String::as_str)
            .chain(self.obstacles.iter().map(|o| o.id()))
        {
            if !seen.insert(id.to_string()) {
                return Err(SceneError::DuplicateId(id.to_string()));
            }
        }
        for (species, d) in &self.densities {
            if *d <= 0.0 || !d.is_finite() {
                return Err(SceneError::InvalidDensity(species.clone()));
            }
        }
        for v in self.vessels.values() {
            if v.pose.orthonormality_defect() > 1e-9 {
                return Err(SceneError::InvalidPose {
                    id: v.id.clone(),
                    defect: v.pose.orthonormality_defect(),
                });
            }
            for c in &v.contents {
                if c.mass_g < 0.0 || !c.mass_g.is_finite() {
                    return Err(SceneError::NegativeMass {
                        id: v.id.clone(),
                        species: c.species.clone(),
                    });
                }
            }
            let volume = v.content_volume_ml(&self.densities);
            if volume > v.capacity_ml + 1e-9 {
                return Err(SceneError::CapacityExceeded {
                    id: v.id.clone(),
                    volume_ml: volume,
                    capacity_ml: v.capacity_ml,
                });
            }
        }
        for d in self.devices.values() {
            if d.reading_g < 0.0 {
                return Err(SceneError::InvalidDevice {
                    id: d.id.clone(),
                    message: "scale reading must be ≥ 0".into(),
                });
            }
            for t in [d.temp_setpoint_c, d.temp_actual_c] {
                if !(0.0..=400.0).contains(&t) {
                    return Err(SceneError::InvalidDevice {
                        id: d.id.clone(),
                        message: format!("temperature {t} °C outside [0, 400]"),
                    });
                }
            }
        }
        for o in &self.obstacles {
            match o {
                Obstacle::Box { id, min, max } => {
                    if min.iter().zip(max).any(|(lo, hi)| lo >= hi) {
                        return Err(SceneError::InvalidObstacle {
                            id: id.clone(),
                            message: "box min must be strictly below max".into(),
                        });
                    }
                }
                Obstacle::Sphere { id, radius, .. } => {
                    if *radius <= 0.0 {
                        return Err(SceneError::InvalidObstacle {
                            id: id.clone(),
                            message: "sphere radius must be positive".into(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Loads and validates a scene file.
pub fn load_scene(path: &Path) -> Result<Workspace, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scene(&text)
}

/// Parses a scene document; rejects unknown keys and invariant violations.
pub fn parse_scene(text: &str) -> Result<Workspace, SceneError> {
    let wire: SceneWire = serde_json::from_str(text).map_err(|e| SceneError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut vessels = BTreeMap::new();
    for v in wire.vessels {
        if vessels.insert(v.id.clone(), v.clone()).is_some() {
            return Err(SceneError::DuplicateId(v.id));
        }
    }
    let mut devices = BTreeMap::new();
    for d in wire.devices {
        if devices.insert(d.id.clone(), d.clone()).is_some() {
            return Err(SceneError::DuplicateId(d.id));
        }
    }
    let workspace = Workspace {
        vessels,
        devices,
        obstacles: wire.obstacles,
        robot_base: wire.robot_base,
        densities: wire.densities,
    };
    workspace.validate()?;
    Ok(workspace)
}

/// Applies a symbolic effect, returning a new workspace.
///
/// Pour effects conserve per-species mass exactly; the input workspace is
/// never modified.
pub fn apply_effect(w: &Workspace, effect: &Effect) -> Result<Workspace, SceneError> {
    let mut next = w.clone();
    match effect {
        Effect::Place { vessel, pose } => {
            let v = next
                .vessels
                .get_mut(vessel)
                .ok_or_else(|| SceneError::UnknownId(vessel.clone()))?;
            v.pose = *pose;
        }
        Effect::Pour {
            from,
            to,
            species,
            mass_g,
        } => {
            w.vessel(from)?;
            w.vessel(to)?;
            if w.vessel(from)?.is_empty() {
                return Err(SceneError::EmptyVessel(from.clone()));
            }
            let have = w.vessel(from)?.species_mass(species);
            if have + 1e-9 < *mass_g {
                return Err(SceneError::InsufficientContents {
                    id: from.clone(),
                    species: species.clone(),
                    have,
                    want: *mass_g,
                });
            }
            let phase = w
                .vessel(from)?
                .contents
                .iter()
                .find(|c| c.species == species.as_str() && c.mass_g > 0.0)
                .map(|c| c.phase)
                .unwrap_or(Phase::Liquid);

            let source = next.vessels.get_mut(from).expect("checked above");
            let mut remaining = *mass_g;
            for c in source.contents.iter_mut().filter(|c| &c.species == species) {
                let take = remaining.min(c.mass_g);
                c.mass_g -= take;
                remaining -= take;
                if remaining <= 0.0 {
                    break;
                }
            }
            source.contents.retain(|c| c.mass_g > 1e-12);

            let dest = next.vessels.get_mut(to).expect("checked above");
            match dest
                .contents
                .iter_mut()
                .find(|c| &c.species == species && c.phase == phase)
            {
                Some(c) => c.mass_g += *mass_g,
                None => dest.contents.push(Content {
                    species: species.clone(),
                    mass_g: *mass_g,
                    phase,
                }),
            }
            let volume = dest.content_volume_ml(&next.densities);
            if volume > dest.capacity_ml + 1e-9 {
                return Err(SceneError::CapacityExceeded {
                    id: to.clone(),
                    volume_ml: volume,
                    capacity_ml: dest.capacity_ml,
                });
            }
        }
        Effect::SetTemperature { device, celsius } => {
            let d = next
                .devices
                .get_mut(device)
                .ok_or_else(|| SceneError::UnknownId(device.clone()))?;
            if !(0.0..=400.0).contains(celsius) {
                return Err(SceneError::InvalidDevice {
                    id: device.clone(),
                    message: format!("temperature {celsius} °C outside [0, 400]"),
                });
            }
            d.temp_setpoint_c = *celsius;
            d.temp_actual_c = *celsius;
        }
        Effect::SetStirring { device, on } => {
            let d = next
                .devices
                .get_mut(device)
                .ok_or_else(|| SceneError::UnknownId(device.clone()))?;
            d.stirring = *on;
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "vessels": [
            {"id": "beaker1", "kind": "beaker",
             "pose": {"xyz": [0, 0, 0], "rpy": [0, 0, 0]},
             "capacity_ml": 250.0}
        ]
    }"#;

    fn two_vessel_scene() -> Workspace {
        parse_scene(
            r#"{
            "vessels": [
                {"id": "beaker1", "kind": "beaker",
                 "pose": {"xyz": [0.4, 0.1, 0.0], "rpy": [0, 0, 0]},
                 "capacity_ml": 250.0,
                 "contents": [{"species": "water", "mass_g": 50.0, "phase": "liquid"}]},
                {"id": "dish", "kind": "dish",
                 "pose": {"xyz": [0.4, -0.2, 0.0], "rpy": [0, 0, 0]},
                 "capacity_ml": 100.0}
            ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_scene_loads() {
        let w = parse_scene(MINIMAL).unwrap();
        assert_eq!(w.vessels.len(), 1);
        assert_eq!(w.devices.len(), 0);
        assert_eq!(w.obstacles.len(), 0);
        let beaker = w.vessel("beaker1").unwrap();
        assert_eq!(beaker.kind, VesselKind::Beaker);
        assert!(beaker.graspable);
        assert!(beaker.is_empty());
    }

    #[test]
    fn overfilled_vessel_rejected() {
        let err = parse_scene(
            r#"{
            "vessels": [
                {"id": "b", "kind": "beaker",
                 "pose": {"xyz": [0, 0, 0], "rpy": [0, 0, 0]},
                 "capacity_ml": 50.0,
                 "contents": [{"species": "water", "mass_g": 60.0, "phase": "liquid"}]}
            ]
        }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("capacity exceeded"), "{err}");
    }

    #[test]
    fn density_affects_volume() {
        // 60 g of salt at 2.17 g/mL is only ~27.6 mL; fits where water would not.
        let w = parse_scene(
            r#"{
            "vessels": [
                {"id": "b", "kind": "beaker",
                 "pose": {"xyz": [0, 0, 0], "rpy": [0, 0, 0]},
                 "capacity_ml": 50.0,
                 "contents": [{"species": "salt", "mass_g": 60.0, "phase": "granular"}]}
            ],
            "densities": {"salt": 2.17}
        }"#,
        )
        .unwrap();
        let v = w.vessel("b").unwrap();
        assert!((v.content_volume_ml(&w.densities) - 60.0 / 2.17).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_scene(r#"{"vessels": [], "gadgets": []}"#).unwrap_err();
        assert!(matches!(err, SceneError::Parse { .. }), "{err}");
    }

    #[test]
    fn parse_error_carries_location() {
        let err = parse_scene("{\n  \"vessels\": [,]\n}").unwrap_err();
        match err {
            SceneError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_scene(
            r#"{
            "vessels": [
                {"id": "x", "kind": "beaker", "pose": {"xyz": [0,0,0], "rpy": [0,0,0]}, "capacity_ml": 10},
                {"id": "x", "kind": "vial", "pose": {"xyz": [1,0,0], "rpy": [0,0,0]}, "capacity_ml": 5}
            ]
        }"#,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::DuplicateId(id) if id == "x"));
    }

    #[test]
    fn place_updates_pose() {
        let w = two_vessel_scene();
        let pose = Transform::from_xyz_rpy([0.1, 0.2, 0.3], [0.0, 0.0, 0.5]);
        let w2 = apply_effect(
            &w,
            &Effect::Place {
                vessel: "beaker1".into(),
                pose,
            },
        )
        .unwrap();
        assert!(w2.vessel("beaker1").unwrap().pose.translation_distance(&pose) < 1e-12);
        // purity: original untouched
        assert!((w.vessel("beaker1").unwrap().pose.translation.x - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pour_transfers_mass() {
        let w = two_vessel_scene();
        let w2 = apply_effect(
            &w,
            &Effect::Pour {
                from: "beaker1".into(),
                to: "dish".into(),
                species: "water".into(),
                mass_g: 10.0,
            },
        )
        .unwrap();
        assert!((w2.vessel("beaker1").unwrap().species_mass("water") - 40.0).abs() < 1e-12);
        assert!((w2.vessel("dish").unwrap().species_mass("water") - 10.0).abs() < 1e-12);
        assert!((w2.total_species_mass("water") - w.total_species_mass("water")).abs() < 1e-12);
    }

    #[test]
    fn pour_more_than_available_fails() {
        let w = two_vessel_scene();
        let err = apply_effect(
            &w,
            &Effect::Pour {
                from: "beaker1".into(),
                to: "dish".into(),
                species: "water".into(),
                mass_g: 60.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::InsufficientContents { .. }), "{err}");
    }

    #[test]
    fn pour_from_empty_fails() {
        let w = two_vessel_scene();
        let err = apply_effect(
            &w,
            &Effect::Pour {
                from: "dish".into(),
                to: "beaker1".into(),
                species: "water".into(),
                mass_g: 1.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::EmptyVessel(_)));
    }

    #[test]
    fn pour_unknown_id_fails() {
        let w = two_vessel_scene();
        let err = apply_effect(
            &w,
            &Effect::Pour {
                from: "nope".into(),
                to: "dish".into(),
                species: "water".into(),
                mass_g: 1.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::UnknownId(_)));
    }
}
