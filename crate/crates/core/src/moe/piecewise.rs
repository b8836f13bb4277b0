//! Top-expert limit of the gated mixture: each input is routed to exactly one
//! expert, so the model is a piecewise function over a partition of ℝ.

/// A binary classifier over the reals.
pub trait BinaryClassifier {
    fn classify(&self, x: f64) -> bool;
}

impl<F: Fn(f64) -> bool> BinaryClassifier for F {
    fn classify(&self, x: f64) -> bool {
        self(x)
    }
}

/// Region of ℝ owned by one expert.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Union of half-open intervals `[lo, hi)`. `lo` may be `-inf`.
    Intervals(Vec<(f64, f64)>),
    /// Everything not claimed by an earlier cell.
    CatchAll,
}

impl Cell {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Cell::Intervals(iv) => iv.iter().any(|&(lo, hi)| lo <= x && x < hi),
            Cell::CatchAll => true,
        }
    }
}

/// Ordered cells with one expert each; the first cell containing `x` wins.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseHypothesis<C> {
    cells: Vec<(Cell, C)>,
}

impl<C: BinaryClassifier> PiecewiseHypothesis<C> {
    /// `pieces` are `(cell, expert)` pairs in priority order; `last` owns the
    /// catch-all cell.
    pub fn new(pieces: Vec<(Vec<(f64, f64)>, C)>, last: C) -> Self {
        let mut cells: Vec<(Cell, C)> = pieces.into_iter().map(|(iv, e)| (Cell::Intervals(iv), e)).collect();
        cells.push((Cell::CatchAll, last));
        PiecewiseHypothesis { cells }
    }

    /// A single expert on all of ℝ.
    pub fn single(expert: C) -> Self {
        PiecewiseHypothesis::new(Vec::new(), expert)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().map(|(c, _)| c)
    }

    pub fn experts(&self) -> impl Iterator<Item = &C> {
        self.cells.iter().map(|(_, e)| e)
    }

    /// Index of the cell that owns `x`.
    pub fn cell_of(&self, x: f64) -> usize {
        self.cells.iter().position(|(c, _)| c.contains(x)).unwrap_or(self.cells.len() - 1)
    }

    pub fn classify(&self, x: f64) -> bool {
        self.cells[self.cell_of(x)].1.classify(x)
    }
}

impl<C: BinaryClassifier> BinaryClassifier for PiecewiseHypothesis<C> {
    fn classify(&self, x: f64) -> bool {
        PiecewiseHypothesis::classify(self, x)
    }
}

pub fn piecewise_classify<C: BinaryClassifier>(h: &PiecewiseHypothesis<C>, x: f64) -> bool {
    h.classify(x)
}
