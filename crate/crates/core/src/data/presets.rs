//! Class tables for the three benchmark scenes: names, map colors and the
//! disjoint train/test counts.

use super::{ClassInfo, Manifest};

/// Scene geometry and the patch size used for each benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SceneInfo {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub patch: usize,
}

pub const INDIAN_PINES: SceneInfo = SceneInfo {
    height: 145,
    width: 145,
    bands: 200,
    patch: 7,
};

pub const PAVIA_UNIVERSITY: SceneInfo = SceneInfo {
    height: 610,
    width: 340,
    bands: 103,
    patch: 11,
};

pub const HOUSTON_2013: SceneInfo = SceneInfo {
    height: 349,
    width: 1905,
    bands: 144,
    patch: 9,
};

type Row = (&'static str, usize, usize, [u8; 3]);

const INDIAN_PINES_CLASSES: [Row; 16] = [
    ("Corn Notill", 50, 1384, [83, 171, 72]),
    ("Corn Mintill", 50, 784, [137, 186, 67]),
    ("Corn", 50, 184, [66, 132, 91]),
    ("Grass Pasture", 50, 447, [60, 131, 69]),
    ("Grass Trees", 50, 697, [144, 82, 54]),
    ("Hay Windrowed", 50, 439, [105, 188, 200]),
    ("Soybean Notill", 50, 918, [255, 255, 255]),
    ("Soybean Mintill", 50, 2418, [199, 176, 201]),
    ("Soybean Clean", 50, 564, [218, 51, 44]),
    ("Wheat", 50, 162, [119, 35, 36]),
    ("Woods", 50, 1244, [55, 101, 166]),
    ("Buildings Grass Trees Drives", 50, 330, [224, 219, 84]),
    ("Stone Steel Towers", 50, 45, [217, 142, 52]),
    ("Alfalfa", 15, 39, [84, 48, 126]),
    ("Grass Pasture Mowed", 15, 11, [227, 119, 91]),
    ("Oats", 15, 5, [157, 87, 150]),
];

const PAVIA_UNIVERSITY_CLASSES: [Row; 9] = [
    ("Asphalt", 548, 6304, [83, 171, 72]),
    ("Meadows", 540, 18146, [66, 132, 91]),
    ("Gravel", 392, 1815, [144, 82, 54]),
    ("Trees", 524, 2912, [255, 255, 255]),
    ("Metal Sheets", 265, 1113, [218, 51, 44]),
    ("Bare Soil", 532, 4572, [55, 101, 166]),
    ("Bitumen", 375, 981, [217, 142, 52]),
    ("Bricks", 514, 3364, [227, 119, 91]),
    ("Shadows", 231, 795, [157, 87, 150]),
];

const HOUSTON_2013_CLASSES: [Row; 15] = [
    ("Healthy Grass", 198, 1053, [83, 171, 72]),
    ("Stressed Grass", 190, 1064, [137, 186, 67]),
    ("Synthetic Grass", 192, 505, [66, 132, 91]),
    ("Tree", 188, 1056, [60, 131, 69]),
    ("Soil", 186, 1056, [144, 82, 54]),
    ("Water", 182, 143, [105, 188, 200]),
    ("Residential", 196, 1072, [255, 255, 255]),
    ("Commercial", 191, 1053, [218, 51, 44]),
    ("Road", 193, 1059, [119, 35, 36]),
    ("Highway", 191, 1036, [55, 101, 166]),
    ("Railway", 181, 1054, [224, 219, 84]),
    ("Parking Lot1", 192, 1041, [217, 142, 52]),
    ("Parking Lot2", 184, 285, [84, 48, 126]),
    ("Tennis Court", 181, 247, [227, 119, 91]),
    ("Running Track", 187, 473, [157, 87, 150]),
];

fn build(name: &str, rows: &[Row]) -> Manifest {
    Manifest {
        name: name.to_string(),
        classes: rows
            .iter()
            .map(|&(name, train, test, rgb)| ClassInfo {
                name: name.to_string(),
                rgb,
                train,
                test,
            })
            .collect(),
        split: None,
    }
}

pub fn indian_pines() -> Manifest {
    build("indian_pines", &INDIAN_PINES_CLASSES)
}

pub fn pavia_university() -> Manifest {
    build("pavia_university", &PAVIA_UNIVERSITY_CLASSES)
}

pub fn houston2013() -> Manifest {
    build("houston2013", &HOUSTON_2013_CLASSES)
}

pub fn by_name(name: &str) -> Option<(Manifest, SceneInfo)> {
    match name {
        "indian_pines" => Some((indian_pines(), INDIAN_PINES)),
        "pavia_university" => Some((pavia_university(), PAVIA_UNIVERSITY)),
        "houston2013" => Some((houston2013(), HOUSTON_2013)),
        _ => None,
    }
}
