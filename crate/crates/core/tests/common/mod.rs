//! Shared fixtures for integration tests.
#![allow(dead_code)]

use volmo_core::dialogue::{ClinicalProfile, ExaminationFinding, ImagingFinding, Symptom};

pub const GOLDEN_PROFILE: &str = include_str!("../fixtures/golden_profile.txt");
pub const GOLDEN_DIALOGUE_BLOCK: &str = include_str!("../fixtures/golden_dialogue_block.txt");
pub const GOLDEN_CAPTION_REVISION: &str = include_str!("../fixtures/golden_caption_revision.txt");
pub const GOLDEN_SCREENING_MYOPIC_FUNDUS: &str = include_str!("../fixtures/golden_screening_myopic_fundus.txt");
pub const GOLDEN_STAGING_DR: &str = include_str!("../fixtures/golden_staging_dr.txt");

fn symptom(d: &str) -> Symptom {
    Symptom {
        description: d.into(),
        duration: None,
        progression: None,
    }
}

/// The vitreal-opacity case used as the published profile example.
pub fn appendix_profile() -> ClinicalProfile {
    ClinicalProfile {
        case_id: "appendix-example".into(),
        medical_history: vec![
            "Sequential nonarteritic anterior ischemic optic neuropathy; complete visual field defect; visual acuity of 1/50 Snellen in each eye".into(),
        ],
        symptoms: vec![
            symptom("Vision loss"),
            symptom("Further painless decrease in visual acuity"),
            symptom("Visual acuity of light perception"),
            Symptom {
                description: "Whitish, dense vitreal opacities".into(),
                duration: Some("2 months".into()),
                progression: Some("Unchanged".into()),
            },
            symptom("Deeply atrophic optic nerves"),
            symptom("Adherent posterior hyaloid in both eyes"),
            symptom("Localized retinal detachment (left eye)"),
            symptom("Retinal tear (right eye)"),
            Symptom {
                description: "Epiretinal remnants from adherent hyaloid (right eye)".into(),
                duration: Some("Several months".into()),
                progression: Some("Unchanged".into()),
            },
        ],
        examination_findings: vec![
            ExaminationFinding {
                exam_type: "Ophthalmic examination (visual acuity)".into(),
                finding: "Severe visual impairment with light perception only.".into(),
                note: Some("The noted decrease in visual acuity was painless, contradicting typical expectations in similar cases.".into()),
            },
            ExaminationFinding {
                exam_type: "Fundoscopic examination".into(),
                finding: "Dense vitreal opacities and atrophic optic nerves with unremarkable retinas.".into(),
                note: None,
            },
            ExaminationFinding {
                exam_type: "Histopathological analysis (microscopic examination)".into(),
                finding: "Presence of vimentin-positive cells of mesenchymal origin without retinal or neuronal differentiation.".into(),
                note: Some("No therapeutic benefit or cellular integration was observed post intravitreal injection of stem cells, contrary to potential expectations.".into()),
            },
        ],
        diagnostic_imaging: vec![ImagingFinding {
            imaging_type: "Fundoscopic photograph - Right and Left Eyes".into(),
            finding: "Dense vitreal opacities localized to the vitreous body without evidence of retinal integration or reaction. Post-vitrectomy, epiretinal remnants from the adherent hyaloid remained unchanged.".into(),
            key_results: Some("Vitreal opacities persisted without therapeutic effects or severe complications. Vitrectomy cleared the opacities completely, with adherence of hyaloids causing retinal detachment and tear, both of which were treated.".into()),
        }],
        ..Default::default()
    }
}

/// A request captured by [`MockServer`].
#[derive(Debug, Clone)]
pub struct Captured {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl Captured {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Minimal HTTP/1.1 server on localhost answering each request with `handler`.
pub struct MockServer {
    pub base_url: String,
    pub requests: std::sync::Arc<std::sync::Mutex<Vec<Captured>>>,
}

impl MockServer {
    pub fn start<F>(handler: F) -> MockServer
    where
        F: Fn(&Captured) -> (u16, String) + Send + Sync + 'static,
    {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let log = requests.clone();
        let handler = std::sync::Arc::new(handler);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let handler = handler.clone();
                let log = log.clone();
                std::thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let mut parts = line.split_whitespace();
                    let method = parts.next().unwrap_or("").to_string();
                    let path = parts.next().unwrap_or("").to_string();
                    let mut headers = Vec::new();
                    let mut len = 0usize;
                    loop {
                        let mut h = String::new();
                        reader.read_line(&mut h).unwrap();
                        let h = h.trim_end();
                        if h.is_empty() {
                            break;
                        }
                        if let Some((k, v)) = h.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                len = v.trim().parse().unwrap_or(0);
                            }
                            headers.push((k.trim().to_string(), v.trim().to_string()));
                        }
                    }
                    let mut body = vec![0u8; len];
                    reader.read_exact(&mut body).unwrap();
                    let req = Captured {
                        method,
                        path,
                        headers,
                        body: String::from_utf8_lossy(&body).into_owned(),
                    };
                    let (status, resp) = handler(&req);
                    log.lock().unwrap().push(req);
                    let out = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{resp}",
                        resp.len()
                    );
                    let _ = stream.write_all(out.as_bytes());
                });
            }
        });
        MockServer {
            base_url: format!("http://{addr}"),
            requests,
        }
    }

    pub fn captured(&self) -> Vec<Captured> {
        self.requests.lock().unwrap().clone()
    }
}

/// An address on which nothing is listening.
pub fn dead_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}
