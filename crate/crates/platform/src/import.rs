//! Batch import documents.

use cleanroute_core::fixtures::CorridorCity;
use cleanroute_core::routegen::TravelMode;
use serde::{Deserialize, Serialize};

use crate::model::{CurrentMode, FeedbackRecord, Participant, Result, RouteRecord};
use crate::service::Platform;

/// Either a bare array of route records or a document with participants
/// and routes. Participants are applied first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImportDoc {
    Routes(Vec<RouteRecord>),
    Full {
        #[serde(default)]
        participants: Vec<Participant>,
        #[serde(default)]
        routes: Vec<RouteRecord>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ImportCounts {
    pub participants: usize,
    pub routes: usize,
    pub feedback: usize,
}

impl ImportDoc {
    pub fn apply(self, platform: &mut Platform) -> Result<ImportCounts> {
        let (participants, routes) = match self {
            ImportDoc::Routes(r) => (Vec::new(), r),
            ImportDoc::Full {
                participants,
                routes,
            } => (participants, routes),
        };
        let mut counts = ImportCounts::default();
        for p in participants {
            platform.create_participant(p)?;
            counts.participants += 1;
        }
        for r in routes {
            platform.submit_route(r)?;
            counts.routes += 1;
        }
        Ok(counts)
    }
}

pub fn import_feedback(
    platform: &mut Platform,
    records: Vec<FeedbackRecord>,
) -> Result<ImportCounts> {
    let mut counts = ImportCounts::default();
    for f in records {
        platform.submit_feedback(f)?;
        counts.feedback += 1;
    }
    Ok(counts)
}

/// One consenting participant per corridor pair, each with a single route
/// along the pair's street.
pub fn corridor_import(city: &CorridorCity, project_id: &str) -> ImportDoc {
    let mut participants = Vec::new();
    let mut routes = Vec::new();
    for pair in &city.pairs {
        let participant_id = format!("p-{}", pair.id);
        participants.push(Participant {
            id: participant_id.clone(),
            questionnaire: Default::default(),
            consent: true,
        });
        routes.push(RouteRecord {
            project_id: project_id.to_owned(),
            route_id: pair.id.clone(),
            participant_id,
            home: pair.geometry[0],
            school: pair.geometry[pair.geometry.len() - 1],
            mode: match pair.mode {
                TravelMode::Walk => CurrentMode::Walk,
                TravelMode::Cycle => CurrentMode::Cycle,
            },
            geometry: pair.geometry.clone(),
            timestamp: String::new(),
        });
    }
    ImportDoc::Full {
        participants,
        routes,
    }
}
