#![allow(dead_code)]

use cleanroute_core::fixtures::CorridorCity;
use cleanroute_core::geometry::Coord;
use cleanroute_platform::import::corridor_import;
use cleanroute_platform::model::{Answer, CurrentMode, FeedbackRecord, Participant, RouteRecord};
use cleanroute_platform::{Config, Platform};

pub const PROJECT: &str = "corridor";

/// In-memory platform with the standard corridor city loaded and its
/// pairs imported.
pub fn corridor_platform() -> (Platform, CorridorCity) {
    let city = CorridorCity::standard();
    let mut p = Platform::in_memory(Config::default());
    p.ingest_network(&city.network_json()).unwrap();
    p.ingest_raster(8, city.raster.to_ascii_grid().as_bytes())
        .unwrap();
    corridor_import(&city, PROJECT).apply(&mut p).unwrap();
    (p, city)
}

pub fn participant(id: &str, consent: bool) -> Participant {
    Participant {
        id: id.into(),
        questionnaire: Default::default(),
        consent,
    }
}

/// A route from (x0, y) to (x1, y) along one street.
pub fn straight_route(
    route_id: &str,
    participant_id: &str,
    y: f64,
    x0: f64,
    x1: f64,
) -> RouteRecord {
    RouteRecord {
        project_id: PROJECT.into(),
        route_id: route_id.into(),
        participant_id: participant_id.into(),
        home: Coord::new(x0, y),
        school: Coord::new(x1, y),
        mode: CurrentMode::Walk,
        geometry: vec![Coord::new(x0, y), Coord::new(x1, y)],
        timestamp: "2024-03-01T08:00:00Z".into(),
    }
}

pub fn feedback(participant_id: &str, will_change: bool, rating: u8) -> FeedbackRecord {
    let a = |answer| Answer {
        answer,
        text: String::new(),
    };
    FeedbackRecord {
        participant_id: participant_id.into(),
        q1_learned: a(true),
        q2_will_change: a(will_change),
        q3_can_act: a(true),
        q4_rating: rating,
        timestamp: String::new(),
    }
}
