//! NBER patent technology classification: 37 subcategories under 6 categories.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NberCategory {
    ComputersCommunications,
    ElectricalElectronic,
    Mechanical,
    DrugsMedical,
    Chemical,
    Other,
}

impl NberCategory {
    pub const ALL: [NberCategory; 6] = [
        NberCategory::ComputersCommunications,
        NberCategory::ElectricalElectronic,
        NberCategory::Mechanical,
        NberCategory::DrugsMedical,
        NberCategory::Chemical,
        NberCategory::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NberCategory::ComputersCommunications => "Computers & Communications",
            NberCategory::ElectricalElectronic => "Electrical & Electronic",
            NberCategory::Mechanical => "Mechanical",
            NberCategory::DrugsMedical => "Drugs & Medical",
            NberCategory::Chemical => "Chemical",
            NberCategory::Other => "Others",
        }
    }
}

/// (two-digit code, label, parent category)
const SUBCATEGORIES: [(u8, &str, NberCategory); 37] = {
    use NberCategory::*;
    [
        (11, "Agriculture, Food, Textiles", Chemical),
        (12, "Coating", Chemical),
        (13, "Gas", Chemical),
        (14, "Organic Compounds", Chemical),
        (15, "Resins", Chemical),
        (19, "Miscellaneous-Chemical", Chemical),
        (21, "Communications", ComputersCommunications),
        (22, "Computer Hardware & Software", ComputersCommunications),
        (23, "Computer Peripherals", ComputersCommunications),
        (24, "Information Storage", ComputersCommunications),
        (25, "Electronic Business Methods & Software", ComputersCommunications),
        (31, "Drugs", DrugsMedical),
        (32, "Surgery & Medical Instruments", DrugsMedical),
        (33, "Biotechnology", DrugsMedical),
        (39, "Miscellaneous-Drugs & Medical", DrugsMedical),
        (41, "Electrical Devices", ElectricalElectronic),
        (42, "Electrical Lighting", ElectricalElectronic),
        (43, "Measuring & Testing", ElectricalElectronic),
        (44, "Nuclear & X-rays", ElectricalElectronic),
        (45, "Power Systems", ElectricalElectronic),
        (46, "Semiconductor Devices", ElectricalElectronic),
        (49, "Miscellaneous-Electrical", ElectricalElectronic),
        (51, "Materials Processing & Handling", Mechanical),
        (52, "Metal Working", Mechanical),
        (53, "Motors, Engines & Parts", Mechanical),
        (54, "Optics", Mechanical),
        (55, "Transportation", Mechanical),
        (59, "Miscellaneous-Mechanical", Mechanical),
        (61, "Agriculture, Husbandry, Food", Other),
        (62, "Amusement Devices", Other),
        (63, "Apparel & Textile", Other),
        (64, "Earth Working & Wells", Other),
        (65, "Furniture, House Fixtures", Other),
        (66, "Heating", Other),
        (67, "Pipes & Joints", Other),
        (68, "Receptacles", Other),
        (69, "Miscellaneous-Others", Other),
    ]
};

/// One of the 37 NBER subcategories, identified by its two-digit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NberSubcategory(u8);

impl NberSubcategory {
    pub fn all() -> impl Iterator<Item = NberSubcategory> {
        SUBCATEGORIES.iter().map(|s| NberSubcategory(s.0))
    }

    pub fn count() -> usize {
        SUBCATEGORIES.len()
    }

    fn entry(self) -> &'static (u8, &'static str, NberCategory) {
        SUBCATEGORIES
            .iter()
            .find(|s| s.0 == self.0)
            .expect("constructed from table")
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        self.entry().1
    }

    pub fn category(self) -> NberCategory {
        self.entry().2
    }

    /// Position in the canonical 37-row ordering.
    pub fn index(self) -> usize {
        SUBCATEGORIES.iter().position(|s| s.0 == self.0).unwrap()
    }

    /// Accepts the two-digit code ("22") or the label, case-insensitively.
    pub fn parse(label: &str) -> Result<Self> {
        let t = label.trim();
        if let Ok(code) = t.parse::<u8>() {
            if SUBCATEGORIES.iter().any(|s| s.0 == code) {
                return Ok(NberSubcategory(code));
            }
        }
        SUBCATEGORIES
            .iter()
            .find(|s| s.1.eq_ignore_ascii_case(t))
            .map(|s| NberSubcategory(s.0))
            .ok_or_else(|| Error::UnknownSubcategory(label.to_string()))
    }
}

impl fmt::Display for NberSubcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for NberSubcategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for NberSubcategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        NberSubcategory::parse(&code.to_string()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn thirty_seven_subcategories_under_six_categories() {
        assert_eq!(NberSubcategory::count(), 37);
        let cats: BTreeSet<_> = NberSubcategory::all().map(|s| s.category()).collect();
        assert_eq!(cats.len(), 6);
        let codes: BTreeSet<_> = NberSubcategory::all().map(|s| s.code()).collect();
        assert_eq!(codes.len(), 37);
    }

    #[test]
    fn parse_by_code_or_name() {
        assert_eq!(
            NberSubcategory::parse("22").unwrap().name(),
            "Computer Hardware & Software"
        );
        assert_eq!(NberSubcategory::parse("communications").unwrap().code(), 21);
        assert!(matches!(
            NberSubcategory::parse("Quantum Gardening"),
            Err(Error::UnknownSubcategory(_))
        ));
        assert!(NberSubcategory::parse("20").is_err());
    }
}
