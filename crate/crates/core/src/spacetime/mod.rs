//! Stations in Euclidean space, light-speed propagation and the scenario
//! file format.

mod events;

pub use events::{
    observed_round_trip, run_events, EventLog, Handlers, Outbox, Payload, RoundTrip, SignalEvent, StationHandler,
};

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// Speed of light in vacuum, m/s (exact by definition of the metre).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Point in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Position(pub [f64; 3]);

impl Position {
    pub const ORIGIN: Position = Position([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position([x, y, z])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        let [x, y, z] = self.0;
        (x * x + y * y + z * z).sqrt()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (*self - *other).norm()
    }

    pub fn dot(&self, other: &Position) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn normalized(&self) -> Position {
        *self * (1.0 / self.norm())
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Mul<f64> for Position {
    type Output = Position;
    fn mul(self, k: f64) -> Position {
        Position([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl std::str::FromStr for Position {
    type Err = Error;

    /// Parses `x,y,z`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Scenario(format!("position {s:?}: {e}")))?;
        match parts.as_slice() {
            &[x, y, z] => Ok(Position::new(x, y, z)),
            _ => Err(Error::Scenario(format!("position {s:?} needs three coordinates"))),
        }
    }
}

/// One-way light travel time between two points, seconds.
pub fn light_time(a: Position, b: Position) -> f64 {
    a.distance(&b) / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Self {
        StationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        StationId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Verifier,
    Prover,
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: StationId,
    pub role: Role,
    pub position: Position,
    /// Time between receiving a signal and emitting the reply.
    #[serde(default, rename = "processing_delay_s")]
    pub processing_delay: f64,
}

impl Station {
    pub fn new(id: impl Into<String>, role: Role, position: Position) -> Self {
        Station {
            id: StationId::new(id),
            role,
            position,
            processing_delay: 0.0,
        }
    }

    pub fn with_delay(mut self, seconds: f64) -> Self {
        self.processing_delay = seconds;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    stations: Vec<Station>,
    claimed_position: Position,
    equidistant: bool,
}

impl ScenarioGeometry {
    pub fn new(stations: Vec<Station>, claimed_position: Position, equidistant: bool) -> Result<Self> {
        let geometry = ScenarioGeometry {
            stations,
            claimed_position,
            equidistant,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    fn validate(&self) -> Result<()> {
        if !self.claimed_position.is_finite() {
            return Err(Error::Scenario("claimed position is not finite".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.stations {
            if !seen.insert(&s.id) {
                return Err(Error::Scenario(format!("duplicate station id `{}`", s.id)));
            }
            if !s.position.is_finite() {
                return Err(Error::Scenario(format!("station `{}` has non-finite position", s.id)));
            }
            if !(s.processing_delay.is_finite() && s.processing_delay >= 0.0) {
                return Err(Error::Scenario(format!("station `{}` has invalid delay", s.id)));
            }
        }
        if self.verifiers().next().is_none() {
            return Err(Error::Scenario("no verifier stations".into()));
        }
        if self.equidistant {
            let distances: Vec<f64> = self.verifiers().map(|v| self.claimed_distance(v)).collect();
            let lo = distances.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tolerance::EQUIDISTANT_SLACK_M {
                return Err(Error::Scenario(format!(
                    "equidistant mode violated: verifier distances span [{lo}, {hi}] m"
                )));
            }
        }
        Ok(())
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn claimed_position(&self) -> Position {
        self.claimed_position
    }

    pub fn is_equidistant(&self) -> bool {
        self.equidistant
    }

    pub fn station(&self, id: &StationId) -> Result<&Station> {
        self.stations
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::UnknownStation(id.to_string()))
    }

    /// Verifier stations `R_1 … R_N` in file order.
    pub fn verifiers(&self) -> impl Iterator<Item = &Station> {
        self.stations.iter().filter(|s| s.role == Role::Verifier)
    }

    pub fn verifier_count(&self) -> usize {
        self.verifiers().count()
    }

    pub fn prover(&self) -> Option<&Station> {
        self.stations.iter().find(|s| s.role == Role::Prover)
    }

    /// Distance from a station to the claimed prover position.
    pub fn claimed_distance(&self, station: &Station) -> f64 {
        station.position.distance(&self.claimed_position)
    }

    /// Common verifier distance `d` in equidistant mode.
    pub fn common_distance(&self) -> Option<f64> {
        if !self.equidistant {
            return None;
        }
        self.verifiers().next().map(|v| self.claimed_distance(v))
    }

    pub fn light_time_between(&self, a: &StationId, b: &StationId) -> Result<f64> {
        Ok(light_time(self.station(a)?.position, self.station(b)?.position))
    }

    /// Length verifier `id`'s round trip would have with a responder exactly
    /// at the claimed position and zero processing delay.
    pub fn expected_round_trip(&self, id: &StationId) -> Result<f64> {
        let v = self.station(id)?;
        Ok(2.0 * light_time(v.position, self.claimed_position))
    }

    /// Copy with one more station.
    pub fn with_station(&self, station: Station) -> Result<Self> {
        let mut stations = self.stations.clone();
        stations.push(station);
        ScenarioGeometry::new(stations, self.claimed_position, self.equidistant)
    }

    /// Copy without any station of role `role`.
    pub fn without_role(&self, role: Role) -> Result<Self> {
        let stations = self.stations.iter().filter(|s| s.role != role).cloned().collect();
        ScenarioGeometry::new(stations, self.claimed_position, self.equidistant)
    }
}

/// Emit time for each listed verifier so that its signal reaches the claimed
/// position at exactly `target_arrival`.
pub fn schedule_simultaneous_arrival(
    geometry: &ScenarioGeometry,
    verifiers: &[StationId],
    target_arrival: f64,
) -> Result<Vec<f64>> {
    let legs = verifiers
        .iter()
        .map(|id| Ok(light_time(geometry.station(id)?.position, geometry.claimed_position())))
        .collect::<Result<Vec<f64>>>()?;
    let needed = legs.iter().cloned().fold(0.0, f64::max);
    if target_arrival.is_nan() || target_arrival < needed {
        return Err(Error::ArrivalTooEarly {
            target: target_arrival,
            needed,
        });
    }
    Ok(legs.into_iter().map(|leg| target_arrival - leg).collect())
}

pub const SCENARIO_SCHEMA: &str = "qpv.scenario/1";

fn default_schema() -> String {
    SCENARIO_SCHEMA.into()
}

fn default_tolerance() -> f64 {
    tolerance::DEFAULT_TIMING_TOLERANCE_S
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default = "default_schema")]
    schema: String,
    claimed_position: Position,
    #[serde(default = "default_tolerance")]
    tolerance_s: f64,
    #[serde(default)]
    equidistant: bool,
    stations: Vec<Station>,
}

/// Geometry plus the timing tolerance ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ScenarioGeometry,
    pub tolerance: f64,
}

impl Scenario {
    pub fn new(geometry: ScenarioGeometry, tolerance: f64) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Error::Scenario(format!("invalid tolerance {tolerance}")));
        }
        Ok(Scenario { geometry, tolerance })
    }

    pub fn with_tolerance(&self, tolerance: f64) -> Result<Self> {
        Scenario::new(self.geometry.clone(), tolerance)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        if file.schema != SCENARIO_SCHEMA {
            return Err(Error::Scenario(format!("unsupported schema {:?}", file.schema)));
        }
        let geometry = ScenarioGeometry::new(file.stations, file.claimed_position, file.equidistant)?;
        Scenario::new(geometry, file.tolerance_s)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScenarioFile {
            schema: SCENARIO_SCHEMA.into(),
            claimed_position: self.geometry.claimed_position,
            tolerance_s: self.tolerance,
            equidistant: self.geometry.equidistant,
            stations: self.geometry.stations.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    /// Three verifiers on the coordinate axes at `d = 3e5 m` around a
    /// prover at the origin.
    pub fn triad() -> Self {
        let d = 3.0e5;
        let stations = vec![
            Station::new("V1", Role::Verifier, Position::new(d, 0.0, 0.0)),
            Station::new("V2", Role::Verifier, Position::new(0.0, d, 0.0)),
            Station::new("V3", Role::Verifier, Position::new(0.0, 0.0, d)),
            Station::new("P", Role::Prover, Position::ORIGIN),
        ];
        let geometry = ScenarioGeometry::new(stations, Position::ORIGIN, true).expect("triad geometry is valid");
        Scenario::new(geometry, tolerance::DEFAULT_TIMING_TOLERANCE_S).expect("valid tolerance")
    }

    /// Four non-coplanar verifiers on a regular tetrahedron of circumradius `d`.
    pub fn tetrahedron(d: f64) -> Self {
        let k = d / 3f64.sqrt();
        let vertices = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        let mut stations: Vec<Station> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Station::new(
                    format!("V{}", i + 1),
                    Role::Verifier,
                    Position::new(k * v[0], k * v[1], k * v[2]),
                )
            })
            .collect();
        stations.push(Station::new("P", Role::Prover, Position::ORIGIN));
        let geometry = ScenarioGeometry::new(stations, Position::ORIGIN, true).expect("tetrahedron geometry is valid");
        Scenario::new(geometry, tolerance::DEFAULT_TIMING_TOLERANCE_S).expect("valid tolerance")
    }

    /// `n` verifiers spread over a sphere of radius `d` (Fibonacci lattice).
    pub fn shell(n: usize, d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Scenario("no verifier stations".into()));
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut stations: Vec<Station> = (0..n)
            .map(|i| {
                let z = if n == 1 {
                    1.0
                } else {
                    1.0 - 2.0 * i as f64 / (n - 1) as f64
                };
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                let p = Position::new(r * phi.cos(), r * phi.sin(), z).normalized() * d;
                Station::new(format!("V{}", i + 1), Role::Verifier, p)
            })
            .collect();
        stations.push(Station::new("P", Role::Prover, Position::ORIGIN));
        let geometry = ScenarioGeometry::new(stations, Position::ORIGIN, true)?;
        Scenario::new(geometry, tolerance::DEFAULT_TIMING_TOLERANCE_S)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_time_examples() {
        assert_eq!(
            light_time(Position::ORIGIN, Position::new(SPEED_OF_LIGHT, 0.0, 0.0)),
            1.0
        );
        assert_eq!(
            light_time(Position::new(1.0, 2.0, 3.0), Position::new(1.0, 2.0, 3.0)),
            0.0
        );
        let d = 3.0e5;
        let round_trip = 2.0 * light_time(Position::ORIGIN, Position::new(0.0, d, 0.0));
        assert!((round_trip - 2.00139e-3).abs() < 1e-8);
        assert_eq!(round_trip, 2.0 * d / SPEED_OF_LIGHT);
    }

    #[test]
    fn equidistant_schedule_starts_at_zero() {
        let scenario = Scenario::triad();
        let g = &scenario.geometry;
        let ids: Vec<StationId> = g.verifiers().map(|v| v.id.clone()).collect();
        let target = g.common_distance().unwrap() / SPEED_OF_LIGHT;
        let emits = schedule_simultaneous_arrival(g, &ids, target).unwrap();
        assert_eq!(emits, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn schedule_two_verifiers() {
        let c = SPEED_OF_LIGHT;
        let stations = vec![
            Station::new("A", Role::Verifier, Position::new(c, 0.0, 0.0)),
            Station::new("B", Role::Verifier, Position::new(-2.0 * c, 0.0, 0.0)),
        ];
        let g = ScenarioGeometry::new(stations, Position::ORIGIN, false).unwrap();
        let ids = vec![StationId::new("A"), StationId::new("B")];
        assert_eq!(schedule_simultaneous_arrival(&g, &ids, 2.0).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            schedule_simultaneous_arrival(&g, &ids, 1.5),
            Err(Error::ArrivalTooEarly { .. })
        ));
    }

    #[test]
    fn schedule_single_verifier() {
        let stations = vec![Station::new("A", Role::Verifier, Position::new(1.0e6, 0.0, 0.0))];
        let g = ScenarioGeometry::new(stations, Position::ORIGIN, true).unwrap();
        let emits = schedule_simultaneous_arrival(&g, &[StationId::new("A")], 0.5).unwrap();
        assert_eq!(emits, vec![0.5 - 1.0e6 / SPEED_OF_LIGHT]);
    }

    #[test]
    fn geometry_validation() {
        let v = |id: &str, x: f64| Station::new(id, Role::Verifier, Position::new(x, 0.0, 0.0));
        assert!(ScenarioGeometry::new(vec![v("A", 1.0), v("A", 2.0)], Position::ORIGIN, false).is_err());
        assert!(ScenarioGeometry::new(vec![v("A", f64::NAN)], Position::ORIGIN, false).is_err());
        assert!(ScenarioGeometry::new(vec![], Position::ORIGIN, false).is_err());
        assert!(ScenarioGeometry::new(vec![v("A", 1.0), v("B", 2.0)], Position::ORIGIN, true).is_err());
        assert!(ScenarioGeometry::new(vec![v("A", 1.0), v("B", -1.0)], Position::ORIGIN, true).is_ok());
        let slow = v("A", 1.0).with_delay(-1.0);
        assert!(ScenarioGeometry::new(vec![slow], Position::ORIGIN, false).is_err());
    }

    #[test]
    fn builders_are_equidistant() {
        for scenario in [
            Scenario::triad(),
            Scenario::tetrahedron(3.0e5),
            Scenario::shell(7, 3.0e5).unwrap(),
        ] {
            assert!(scenario.geometry.is_equidistant());
        }
        assert_eq!(Scenario::tetrahedron(1.0e5).geometry.verifier_count(), 4);
    }

    #[test]
    fn scenario_json_round_trip() {
        let scenario = Scenario::tetrahedron(1.0e5);
        let text = scenario.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, scenario);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn scenario_defaults_and_errors() {
        let text = r#"{"claimed_position":[0,0,0],"stations":[{"id":"V1","role":"verifier","position":[10,0,0]}]}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.tolerance, tolerance::DEFAULT_TIMING_TOLERANCE_S);
        assert_eq!(s.geometry.stations()[0].processing_delay, 0.0);
        assert!(Scenario::from_json(r#"{"claimed_position":[0,0],"stations":[]}"#).is_err());
        let bad = r#"{"schema":"other","claimed_position":[0,0,0],"stations":[{"id":"V1","role":"verifier","position":[1,0,0]}]}"#;
        assert!(Scenario::from_json(bad).is_err());
    }

    #[test]
    fn position_parsing() {
        assert_eq!("0,0,1000".parse::<Position>().unwrap(), Position::new(0.0, 0.0, 1000.0));
        assert!("1,2".parse::<Position>().is_err());
        assert!("a,b,c".parse::<Position>().is_err());
    }
}
