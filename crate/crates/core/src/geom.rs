//! Points in the plane and the four quadrant labels.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x1, x2): (f64, f64)) -> Self {
        Self { x1, x2 }
    }
}

/// Direction of the lattice shifts along one axis.
///
/// `Minus` sums over shifts `x - i` with `i >= 0`, `Plus` over `x + i` with `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisSign {
    Minus,
    Plus,
}

/// One of the four quadrants anchored at a point.
///
/// The first sign refers to the first coordinate: `MinusPlus` is the quadrant
/// `{Y1 <= x1, Y2 > x2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadrantTag {
    MinusMinus,
    MinusPlus,
    PlusMinus,
    PlusPlus,
}

impl QuadrantTag {
    /// In the canonical order `--, -+, +-, ++` used for weight vectors.
    pub const ALL: [QuadrantTag; 4] = [
        QuadrantTag::MinusMinus,
        QuadrantTag::MinusPlus,
        QuadrantTag::PlusMinus,
        QuadrantTag::PlusPlus,
    ];

    pub fn index(self) -> usize {
        match self {
            QuadrantTag::MinusMinus => 0,
            QuadrantTag::MinusPlus => 1,
            QuadrantTag::PlusMinus => 2,
            QuadrantTag::PlusPlus => 3,
        }
    }

    pub fn axis_signs(self) -> (AxisSign, AxisSign) {
        use AxisSign::*;
        match self {
            QuadrantTag::MinusMinus => (Minus, Minus),
            QuadrantTag::MinusPlus => (Minus, Plus),
            QuadrantTag::PlusMinus => (Plus, Minus),
            QuadrantTag::PlusPlus => (Plus, Plus),
        }
    }

    /// Sign of the density inversion series: `+` for `--`/`++`, `-` for the mixed tags.
    pub fn density_sign(self) -> f64 {
        match self {
            QuadrantTag::MinusMinus | QuadrantTag::PlusPlus => 1.0,
            QuadrantTag::MinusPlus | QuadrantTag::PlusMinus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QuadrantTag::MinusMinus => "--",
            QuadrantTag::MinusPlus => "-+",
            QuadrantTag::PlusMinus => "+-",
            QuadrantTag::PlusPlus => "++",
        }
    }
}

impl std::str::FromStr for QuadrantTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mm" | "--" => Ok(QuadrantTag::MinusMinus),
            "mp" | "-+" => Ok(QuadrantTag::MinusPlus),
            "pm" | "+-" => Ok(QuadrantTag::PlusMinus),
            "pp" | "++" => Ok(QuadrantTag::PlusPlus),
            other => Err(format!("unknown quadrant tag '{other}'")),
        }
    }
}

/// Values of the four quadrant probabilities `(F--, F-+, F+-, F++)` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantProbs {
    pub mm: f64,
    pub mp: f64,
    pub pm: f64,
    pub pp: f64,
}

impl QuadrantProbs {
    pub const fn new(mm: f64, mp: f64, pm: f64, pp: f64) -> Self {
        Self { mm, mp, pm, pp }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.mm, self.mp, self.pm, self.pp]
    }

    pub fn get(&self, tag: QuadrantTag) -> f64 {
        self.to_array()[tag.index()]
    }

    pub fn sum(&self) -> f64 {
        self.mm + self.mp + self.pm + self.pp
    }
}
