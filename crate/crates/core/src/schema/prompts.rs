use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SchemaError;
use crate::template;

pub const SCREENING_TEMPLATE: &str = include_str!("../../templates/screening.txt");
/// Inline single-line variant of the screening instruction.
pub const SCREENING_INLINE_TEMPLATE: &str = include_str!("../../templates/screening_inline.txt");
pub const STAGING_DR_TEMPLATE: &str = include_str!("../../templates/staging_dr.txt");
/// Macular-hole grading prompt built on the DR skeleton; not a published prompt.
pub const STAGING_MACULAR_HOLE_TEMPLATE: &str = include_str!("../../templates/staging_macular_hole.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "CFP")]
    Cfp,
    #[serde(rename = "OCT")]
    Oct,
    #[serde(rename = "visual_field")]
    VisualField,
    #[serde(rename = "other")]
    Other,
}

impl Modality {
    /// Opening sentence of the screening prompt, including its trailing space.
    pub fn sentence(&self) -> &'static str {
        match self {
            Modality::Cfp => "This is a colorful fundus image. ",
            Modality::Oct => "This is an optical coherence tomography image. ",
            Modality::VisualField => "This is a visual field test image. ",
            Modality::Other => "This is an eye image. ",
        }
    }
}

/// The twelve screened conditions and signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Glaucoma,
    #[serde(rename = "AMD")]
    Amd,
    #[serde(rename = "DR")]
    Dr,
    Drusen,
    Hemorrhage,
    HypertensiveRetinopathy,
    IncreasedCupToDiscRatio,
    MacularEdema,
    MyopicFundus,
    Nevus,
    Scar,
    VascularOcclusion,
}

impl Condition {
    pub const ALL: [Condition; 12] = [
        Condition::Glaucoma,
        Condition::Amd,
        Condition::Dr,
        Condition::Drusen,
        Condition::Hemorrhage,
        Condition::HypertensiveRetinopathy,
        Condition::IncreasedCupToDiscRatio,
        Condition::MacularEdema,
        Condition::MyopicFundus,
        Condition::Nevus,
        Condition::Scar,
        Condition::VascularOcclusion,
    ];

    /// Name used inside prompts.
    pub fn display_name(&self) -> &'static str {
        match self {
            Condition::Glaucoma => "glaucoma",
            Condition::Amd => "age-related macular degeneration",
            Condition::Dr => "diabetic retinopathy",
            Condition::Drusen => "drusen",
            Condition::Hemorrhage => "hemorrhage",
            Condition::HypertensiveRetinopathy => "hypertensive retinopathy",
            Condition::IncreasedCupToDiscRatio => "increased cup-to-disc ratio",
            Condition::MacularEdema => "macular edema",
            Condition::MyopicFundus => "myopic fundus",
            Condition::Nevus => "nevus",
            Condition::Scar => "scar",
            Condition::VascularOcclusion => "vascular occlusion",
        }
    }

    /// Short stable key used in instance ids.
    pub fn key(&self) -> &'static str {
        match self {
            Condition::Glaucoma => "glaucoma",
            Condition::Amd => "amd",
            Condition::Dr => "dr",
            Condition::Drusen => "drusen",
            Condition::Hemorrhage => "hemorrhage",
            Condition::HypertensiveRetinopathy => "hypertensive_retinopathy",
            Condition::IncreasedCupToDiscRatio => "increased_cup_to_disc_ratio",
            Condition::MacularEdema => "macular_edema",
            Condition::MyopicFundus => "myopic_fundus",
            Condition::Nevus => "nevus",
            Condition::Scar => "scar",
            Condition::VascularOcclusion => "vascular_occlusion",
        }
    }

    fn aliases(&self) -> &'static [&'static str] {
        match self {
            Condition::Amd => &["amd", "age related macular degeneration"],
            Condition::Dr => &["dr", "diabetic_retinopathy"],
            Condition::Hemorrhage => &["haemorrhage", "retinal hemorrhage"],
            Condition::IncreasedCupToDiscRatio => &["increased cup to disc ratio", "cup-to-disc ratio", "cdr"],
            Condition::MacularEdema => &["macular oedema", "dme", "diabetic macular edema"],
            Condition::MyopicFundus => &["myopia", "pathologic myopia"],
            Condition::Nevus => &["naevus", "choroidal nevus"],
            Condition::VascularOcclusion => &["retinal vascular occlusion", "rvo", "retinal vein occlusion"],
            _ => &[],
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Condition {
    type Err = SchemaError;

    /// Case-insensitive match on the display name, key or an alias.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase();
        let norm_spaced = norm.replace('_', " ");
        Condition::ALL
            .into_iter()
            .find(|c| {
                c.display_name() == norm
                    || c.key() == norm
                    || c.display_name() == norm_spaced
                    || c.aliases().iter().any(|a| *a == norm || *a == norm_spaced)
            })
            .ok_or_else(|| SchemaError::UnknownCondition(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StagingDisease {
    #[serde(rename = "DR")]
    Dr,
    #[serde(rename = "macular_hole")]
    MacularHole,
}

impl StagingDisease {
    pub fn valid_stages(&self) -> &'static [u8] {
        match self {
            StagingDisease::Dr => &[0, 1, 2, 3, 4],
            StagingDisease::MacularHole => &[2, 3, 4],
        }
    }

    /// True when the prompt is an extension of the published DR prompt.
    pub fn prompt_extrapolated(&self) -> bool {
        matches!(self, StagingDisease::MacularHole)
    }
}

impl FromStr for StagingDisease {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace([' ', '-'], "_").as_str() {
            "dr" | "diabetic_retinopathy" => Ok(StagingDisease::Dr),
            "macular_hole" | "mh" => Ok(StagingDisease::MacularHole),
            _ => Err(SchemaError::UnsupportedDisease(s.to_string())),
        }
    }
}

/// Screening instruction for a condition and modality.
pub fn build_screening_prompt(condition: Condition, modality: Modality) -> String {
    template::fill(
        SCREENING_TEMPLATE,
        &[
            ("modality_sentence", modality.sentence()),
            ("condition", condition.display_name()),
        ],
    )
}

/// Screening prompt from a free-form condition name.
pub fn build_screening_prompt_named(condition: &str, modality: Modality) -> Result<String, SchemaError> {
    Ok(build_screening_prompt(condition.parse()?, modality))
}

pub fn build_staging_prompt(disease: StagingDisease) -> String {
    match disease {
        StagingDisease::Dr => STAGING_DR_TEMPLATE.to_string(),
        StagingDisease::MacularHole => STAGING_MACULAR_HOLE_TEMPLATE.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn screening_myopic_fundus() {
        assert_eq!(
            build_screening_prompt(Condition::MyopicFundus, Modality::Cfp),
            "This is a colorful fundus image. \nPlease tell me whether this image shows myopic fundus. \nAnswer in format: TRUE or FALSE."
        );
        let dr = build_screening_prompt_named("Diabetic Retinopathy", Modality::Cfp).unwrap();
        assert!(dr.contains("Please tell me whether this image shows diabetic retinopathy. \n"));
        assert_eq!(
            build_screening_prompt_named("cataract", Modality::Cfp).unwrap_err(),
            SchemaError::UnknownCondition("cataract".into())
        );
    }

    #[test]
    fn every_prompt_ends_with_instruction() {
        for c in Condition::ALL {
            for m in [Modality::Cfp, Modality::Oct, Modality::VisualField, Modality::Other] {
                assert!(build_screening_prompt(c, m).ends_with("Answer in format: TRUE or FALSE."));
            }
        }
    }

    #[test]
    fn aliases() {
        assert_eq!(
            "age-related macular degeneration".parse::<Condition>().unwrap(),
            Condition::Amd
        );
        assert_eq!("AMD".parse::<Condition>().unwrap(), Condition::Amd);
        assert_eq!(
            "increased_cup_to_disc_ratio".parse::<Condition>().unwrap(),
            Condition::IncreasedCupToDiscRatio
        );
        assert_eq!("Macular Oedema".parse::<Condition>().unwrap(), Condition::MacularEdema);
    }

    #[test]
    fn staging() {
        let dr = build_staging_prompt(StagingDisease::Dr);
        assert!(dr.contains("on a scale of 0 to 4"));
        for line in [
            "0 - No DR",
            "1 - Mild",
            "2 - ModeRate",
            "3 - Severe",
            "4 - Proliferative DR",
        ] {
            assert!(dr.lines().any(|l| l == line));
        }
        assert_eq!(
            dr.lines().last().unwrap(),
            "Your response should only contain a single number, representing your rating."
        );
        let mh = build_staging_prompt(StagingDisease::MacularHole);
        let listed: Vec<u8> = mh
            .lines()
            .filter_map(|l| l.split_once(" - ").and_then(|(n, _)| n.parse().ok()))
            .collect();
        assert_eq!(listed, vec![2, 3, 4]);
        assert_eq!(
            "cataract".parse::<StagingDisease>().unwrap_err(),
            SchemaError::UnsupportedDisease("cataract".into())
        );
    }
}
