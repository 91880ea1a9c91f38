//! Published risk-ratio tables and figure presets.
//!
//! Tables 1 and 2 list `(JS, degree 2, degree 3)` ratios, tables 3 and 4 list
//! `(degree 3, degree 4)` ratios, each on the same `lambda x omega` grid.

/// Row labels, `lambda = ||theta||^2`.
pub const TABLE_LAMBDAS: [f64; 5] = [1.2418, 5.0019, 10.4311, 15.4110, 20.0];

/// Column labels.
pub const TABLE_OMEGAS: [f64; 6] = [0.0, 0.1, 0.2, 0.5, 0.7, 0.9];

/// Dimensions appearing in the figure and table captions.
pub const TABLE_DIMENSIONS: [usize; 6] = [8, 12, 14, 18, 20, 24];

/// Estimator slot in a table or curve: `1` is James-Stein, `2..=4` the
/// polynomial chain, `0` the MLE.
pub type Degree = usize;

#[derive(Debug, Clone, Copy)]
pub struct PublishedTable {
    pub number: u8,
    pub p: usize,
    /// Entry order within each cell.
    pub degrees: &'static [Degree],
    /// Row-major over `(lambda, omega, entry)`.
    values: &'static [f64],
}

impl PublishedTable {
    pub fn width(&self) -> usize {
        self.degrees.len()
    }

    /// Printed entries of cell `(lambda index, omega index)`.
    pub fn cell(&self, row: usize, col: usize) -> &'static [f64] {
        let w = self.width();
        let start = (row * TABLE_OMEGAS.len() + col) * w;
        &self.values[start..start + w]
    }

    /// Iterates `(row, col, lambda, omega, entries)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64, &'static [f64])> + '_ {
        TABLE_LAMBDAS.iter().enumerate().flat_map(move |(i, &lam)| {
            TABLE_OMEGAS
                .iter()
                .enumerate()
                .map(move |(j, &om)| (i, j, lam, om, self.cell(i, j)))
        })
    }
}

#[rustfmt::skip]
const TABLE1: [f64; 90] = [
    0.2134, 0.2010, 0.1973,  0.2920, 0.2809, 0.2776,  0.3707, 0.3608, 0.3579,  0.6067, 0.6005, 0.5987,  0.7640, 0.7603, 0.7592,  0.9213, 0.9201, 0.9197,
    0.3745, 0.3663, 0.36309, 0.4371, 0.4297, 0.4268,  0.4996, 0.4930, 0.4905,  0.6873, 0.6831, 0.6815,  0.8124, 0.8099, 0.8089,  0.9374, 0.9366, 0.9363,
    0.5218, 0.5168, 0.5150,  0.5697, 0.5652, 0.5635,  0.6175, 0.6135, 0.6120,  0.7609, 0.7584, 0.7575,  0.8565, 0.8550, 0.8545,  0.9522, 0.9517, 0.9515,
    0.6086, 0.6052, 0.6041,  0.6477, 0.6447, 0.6437,  0.6869, 0.6842, 0.6833,  0.8043, 0.8026, 0.8020,  0.8826, 0.8816, 0.8812,  0.9608, 0.9605, 0.9604,
    0.6653, 0.6628, 0.6621,  0.6988, 0.6965, 0.6959,  0.7322, 0.7302, 0.7297,  0.8326, 0.8314, 0.8310,  0.8996, 0.8988, 0.8986,  0.9665, 0.9663, 0.9662,
];

#[rustfmt::skip]
const TABLE2: [f64; 90] = [
    0.1688, 0.1608, 0.1563,  0.2519, 0.2448, 0.2406,  0.3351, 0.3287, 0.3250,  0.5844, 0.5804, 0.5781,  0.7506, 0.7482, 0.7469,  0.9169, 0.9161, 0.9156,
    0.3079, 0.3021, 0.2980,  0.3771, 0.3719, 0.3682,  0.4463, 0.4417, 0.4384,  0.6540, 0.6511, 0.6490,  0.7924, 0.7906, 0.7894,  0.9308, 0.9302, 0.9298,
    0.4535, 0.4418, 0.4390,  0.5011, 0.4976, 0.4951,  0.5565, 0.5534, 0.5512,  0.7228, 0.7209, 0.7195,  0.8337, 0.8325, 0.8317,  0.9446, 0.9442, 0.9439,
    0.5327, 0.5299, 0.5280,  0.5794, 0.5769, 0.5752,  0.6261, 0.6239, 0.6224,  0.7663, 0.7649, 0.7640,  0.8598, 0.8590, 0.8584,  0.9533, 0.9530, 0.9528,
    0.5923, 0.5901, 0.5888,  0.6331, 0.6311, 0.6299,  0.6738, 0.6721, 0.6710,  0.7961, 0.7951, 0.7944,  0.8777, 0.8770, 0.8766,  0.9592, 0.9590, 0.9589,
];

#[rustfmt::skip]
const TABLE3: [f64; 60] = [
    0.1419, 0.1414,  0.2277, 0.2274,  0.3135, 0.3134,  0.5709, 0.5713,  0.7426, 0.7432,  0.9142, 0.9152,
    0.2738, 0.2732,  0.3464, 0.3459,  0.4190, 0.4187,  0.6369, 0.6368,  0.7821, 0.7822,  0.9274, 0.9277,
    0.4091, 0.4087,  0.4682, 0.4679,  0.5273, 0.5270,  0.7045, 0.7044,  0.8227, 0.8227,  0.9409, 0.9410,
    0.4969, 0.4967,  0.5472, 0.5470,  0.5975, 0.5973,  0.7484, 0.7483,  0.8491, 0.8490,  0.9497, 0.9497,
    0.5581, 0.5579,  0.6022, 0.6021,  0.6464, 0.6463,  0.7790, 0.7790,  0.8674, 0.8674,  0.9558, 0.9558,
];

#[rustfmt::skip]
const TABLE4: [f64; 60] = [
    0.1201, 0.1191,  0.2081, 0.2074,  0.2961, 0.2957,  0.5600, 0.5606,  0.7360, 0.7372,  0.9120, 0.9138,
    0.2359, 0.2348,  0.3123, 0.3114,  0.3887, 0.3880,  0.6180, 0.6178,  0.7708, 0.7710,  0.9236, 0.9242,
    0.3604, 0.3596,  0.4244, 0.4237,  0.4883, 0.4877,  0.6802, 0.6799,  0.8081, 0.8081,  0.9360, 0.9362,
    0.4448, 0.4442,  0.5003, 0.4998,  0.5558, 0.5554,  0.7224, 0.7222,  0.8334, 0.8333,  0.9445, 0.9445,
    0.5055, 0.5051,  0.5549, 0.5546,  0.6044, 0.6041,  0.7527, 0.7526,  0.8516, 0.8516,  0.9505, 0.9505,
];

pub const TABLES: [PublishedTable; 4] = [
    PublishedTable { number: 1, p: 14, degrees: &[1, 2, 3], values: &TABLE1 },
    PublishedTable { number: 2, p: 18, degrees: &[1, 2, 3], values: &TABLE2 },
    PublishedTable { number: 3, p: 20, degrees: &[3, 4], values: &TABLE3 },
    PublishedTable { number: 4, p: 24, degrees: &[3, 4], values: &TABLE4 },
];

pub fn table(number: u8) -> Option<&'static PublishedTable> {
    TABLES.iter().find(|t| t.number == number)
}

/// `(p, omega, estimators)` of the risk-ratio figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigurePreset {
    pub number: u8,
    pub p: usize,
    pub omega: f64,
    pub degrees: &'static [Degree],
}

pub const FIGURES: [FigurePreset; 8] = [
    FigurePreset { number: 1, p: 8, omega: 0.1, degrees: &[1, 2] },
    FigurePreset { number: 2, p: 8, omega: 0.4, degrees: &[1, 2] },
    FigurePreset { number: 3, p: 12, omega: 0.1, degrees: &[1, 2] },
    FigurePreset { number: 4, p: 12, omega: 0.4, degrees: &[1, 2] },
    FigurePreset { number: 5, p: 14, omega: 0.1, degrees: &[2, 3] },
    FigurePreset { number: 6, p: 14, omega: 0.4, degrees: &[2, 3] },
    FigurePreset { number: 7, p: 18, omega: 0.1, degrees: &[2, 3] },
    FigurePreset { number: 8, p: 18, omega: 0.4, degrees: &[2, 3] },
];

pub fn figure(number: u8) -> Option<&'static FigurePreset> {
    FIGURES.iter().find(|f| f.number == number)
}
