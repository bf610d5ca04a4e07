//! Grid-cell similarity between two code-index maps.
//!
//! Both maps are split into the same grid. For every pair of co-located cells
//! the `n_top` most frequent codes are taken from each side; the cells count as
//! similar when at least `delta_sim` of those codes are shared. The map score
//! is the fraction of similar cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::CodeIndexMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityParams {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub n_top: usize,
    pub delta_sim: usize,
}

impl Default for SimilarityParams {
    /// 5x5 grid, top 5 codes, at least 2 shared.
    fn default() -> Self {
        Self {
            grid_rows: 5,
            grid_cols: 5,
            n_top: 5,
            delta_sim: 2,
        }
    }
}

impl SimilarityParams {
    /// 5x5 grid, top 10 codes, at least 5 shared.
    pub fn alternate() -> Self {
        Self {
            n_top: 10,
            delta_sim: 5,
            ..Self::default()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(Error::Config(format!(
                "grid must be at least 1x1, got {}x{}",
                self.grid_rows, self.grid_cols
            )));
        }
        if self.n_top == 0 {
            return Err(Error::Config("n_top must be >= 1".into()));
        }
        if self.delta_sim == 0 || self.delta_sim > self.n_top {
            return Err(Error::Config(format!(
                "delta_sim must be in [1, n_top={}], got {}",
                self.n_top, self.delta_sim
            )));
        }
        Ok(())
    }
}

/// A rectangular window into a [`CodeIndexMap`].
#[derive(Debug, Clone, Copy)]
pub struct CellView<'a> {
    map: &'a CodeIndexMap,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
}

impl<'a> CellView<'a> {
    pub fn origin(&self) -> (usize, usize) {
        (self.row0, self.col0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn codes(&self) -> impl Iterator<Item = u16> + 'a {
        let map = self.map;
        let (row0, col0, cols) = (self.row0, self.col0, self.cols);
        (row0..row0 + self.rows).flat_map(move |r| {
            let start = r * map.width() + col0;
            map.indices()[start..start + cols].iter().copied()
        })
    }
}

/// Splits `map` into `grid_rows x grid_cols` equal cells, row-major.
pub fn partition_grid<'a>(
    map: &'a CodeIndexMap,
    params: &SimilarityParams,
) -> Result<Vec<CellView<'a>>> {
    params.validate()?;
    if !map.height().is_multiple_of(params.grid_rows) {
        return Err(Error::Shape(format!(
            "map height {} is not divisible by {} grid rows",
            map.height(),
            params.grid_rows
        )));
    }
    if !map.width().is_multiple_of(params.grid_cols) {
        return Err(Error::Shape(format!(
            "map width {} is not divisible by {} grid columns",
            map.width(),
            params.grid_cols
        )));
    }
    let rows = map.height() / params.grid_rows;
    let cols = map.width() / params.grid_cols;
    let mut cells = Vec::with_capacity(params.n_cells());
    for gr in 0..params.grid_rows {
        for gc in 0..params.grid_cols {
            cells.push(CellView {
                map,
                row0: gr * rows,
                col0: gc * cols,
                rows,
                cols,
            });
        }
    }
    Ok(cells)
}

/// The `n_top` most frequent codes of a cell with their counts, by descending
/// frequency and then ascending code.
pub fn cell_top_codes(cell: &CellView<'_>, n_top: usize) -> Vec<(u16, usize)> {
    let mut codes: Vec<u16> = cell.codes().collect();
    codes.sort_unstable();
    let mut histogram: Vec<(u16, usize)> = Vec::new();
    for code in codes {
        match histogram.last_mut() {
            Some((c, n)) if *c == code => *n += 1,
            _ => histogram.push((code, 1)),
        }
    }
    // stable sort keeps ascending code order within equal counts
    histogram.sort_by_key(|h| std::cmp::Reverse(h.1));
    histogram.truncate(n_top);
    histogram
}

/// Number of codes shared by the two top-code lists and whether it reaches
/// `delta_sim`.
pub fn cell_similar(
    cell_u: &CellView<'_>,
    cell_v: &CellView<'_>,
    params: &SimilarityParams,
) -> (bool, usize) {
    debug_assert_eq!(cell_u.area(), cell_v.area());
    let top_u = cell_top_codes(cell_u, params.n_top);
    let top_v = cell_top_codes(cell_v, params.n_top);
    let overlap = top_u
        .iter()
        .filter(|(code, _)| top_v.iter().any(|(other, _)| other == code))
        .count();
    (overlap >= params.delta_sim, overlap)
}

/// Per-cell outcome of a map comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityBreakdown {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub similar: Vec<bool>,
    pub overlaps: Vec<usize>,
}

impl SimilarityBreakdown {
    pub fn similar_cells(&self) -> usize {
        self.similar.iter().filter(|&&s| s).count()
    }

    pub fn score(&self) -> f64 {
        self.similar_cells() as f64 / self.similar.len() as f64
    }
}

pub fn compare_maps(
    map_u: &CodeIndexMap,
    map_v: &CodeIndexMap,
    params: &SimilarityParams,
) -> Result<SimilarityBreakdown> {
    if map_u.shape() != map_v.shape() {
        return Err(Error::Shape(format!(
            "cannot compare {}x{} map with {}x{} map",
            map_u.height(),
            map_u.width(),
            map_v.height(),
            map_v.width()
        )));
    }
    let cells_u = partition_grid(map_u, params)?;
    let cells_v = partition_grid(map_v, params)?;
    let (similar, overlaps) = cells_u
        .iter()
        .zip(&cells_v)
        .map(|(u, v)| cell_similar(u, v, params))
        .unzip();
    Ok(SimilarityBreakdown {
        grid_rows: params.grid_rows,
        grid_cols: params.grid_cols,
        similar,
        overlaps,
    })
}

/// Fraction of grid cells judged similar, a multiple of `1 / n_cells`.
pub fn map_similarity(
    map_u: &CodeIndexMap,
    map_v: &CodeIndexMap,
    params: &SimilarityParams,
) -> Result<f64> {
    Ok(compare_maps(map_u, map_v, params)?.score())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(h: usize, w: usize, indices: Vec<u16>) -> CodeIndexMap {
        CodeIndexMap::new(h, w, 512, indices).unwrap()
    }

    fn params(grid: usize, n_top: usize, delta_sim: usize) -> SimilarityParams {
        SimilarityParams {
            grid_rows: grid,
            grid_cols: grid,
            n_top,
            delta_sim,
        }
    }

    #[test]
    fn partition_full_resolution_map() {
        let m = map(150, 240, vec![0; 150 * 240]);
        let cells = partition_grid(&m, &SimilarityParams::default()).unwrap();
        assert_eq!(cells.len(), 25);
        assert!(cells.iter().all(|c| c.rows() == 30 && c.cols() == 48));
        assert_eq!(cells[6].origin(), (30, 48));
    }

    #[test]
    fn partition_unit_cells() {
        let m = map(2, 2, vec![1, 2, 3, 4]);
        let cells = partition_grid(&m, &params(2, 1, 1)).unwrap();
        let codes: Vec<Vec<u16>> = cells.iter().map(|c| c.codes().collect()).collect();
        assert_eq!(codes, vec![vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn partition_rejects_non_divisible() {
        let m = map(150, 240, vec![0; 150 * 240]);
        let p = SimilarityParams {
            grid_rows: 7,
            ..SimilarityParams::default()
        };
        let msg = partition_grid(&m, &p).unwrap_err().to_string();
        assert!(msg.contains("height 150"), "{msg}");
    }

    #[test]
    fn params_validation() {
        assert!(params(5, 5, 6).validate().is_err());
        assert!(params(5, 0, 0).validate().is_err());
        assert!(params(0, 5, 2).validate().is_err());
        assert!(SimilarityParams::alternate().validate().is_ok());
    }

    #[test]
    fn top_codes_single_code() {
        let m = map(2, 3, vec![9; 6]);
        let cells = partition_grid(&m, &params(1, 5, 1)).unwrap();
        assert_eq!(cell_top_codes(&cells[0], 5), vec![(9, 6)]);
    }

    #[test]
    fn top_codes_tie_rule() {
        let mut codes = vec![5u16; 10];
        codes.extend([2u16; 10]);
        codes.extend([7u16; 3]);
        codes.push(7);
        let m = map(4, 6, codes);
        let cells = partition_grid(&m, &params(1, 2, 1)).unwrap();
        assert_eq!(cell_top_codes(&cells[0], 2), vec![(2, 10), (5, 10)]);
    }

    #[test]
    fn disjoint_cells_not_similar() {
        let u = map(2, 2, vec![0; 4]);
        let v = map(2, 2, vec![1; 4]);
        let p = params(1, 5, 2);
        let cu = partition_grid(&u, &p).unwrap();
        let cv = partition_grid(&v, &p).unwrap();
        assert_eq!(cell_similar(&cu[0], &cv[0], &p), (false, 0));
        assert_eq!(map_similarity(&u, &v, &p).unwrap(), 0.0);
    }

    #[test]
    fn identical_single_code_cells() {
        let u = map(2, 2, vec![4; 4]);
        let p = params(1, 5, 1);
        let cu = partition_grid(&u, &p).unwrap();
        assert_eq!(cell_similar(&cu[0], &cu[0], &p), (true, 1));
        // a single distinct code can never reach delta_sim = 2
        let p2 = params(1, 5, 2);
        assert_eq!(map_similarity(&u, &u, &p2).unwrap(), 0.0);
    }

    /// Builds a cell whose codes have the requested descending frequencies.
    fn cell_codes(spec: &[(u16, usize)]) -> Vec<u16> {
        spec.iter()
            .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
            .collect()
    }

    #[test]
    fn constructed_top5_overlap() {
        // top-5 {3,7,9,12,40} and {7,9,55,60,61}; tails below the top 5 on both sides
        let u = cell_codes(&[
            (3, 8),
            (7, 7),
            (9, 6),
            (12, 5),
            (40, 4),
            (55, 2),
            (60, 1),
            (61, 1),
            (1, 1),
            (2, 1),
        ]);
        let v = cell_codes(&[
            (7, 8),
            (9, 7),
            (55, 6),
            (60, 5),
            (61, 4),
            (3, 2),
            (12, 1),
            (40, 1),
            (1, 1),
            (2, 1),
        ]);
        assert_eq!(u.len(), v.len());
        let (h, w) = (6, u.len() / 6);
        let mu = map(h, w, u);
        let mv = map(h, w, v);
        let p = params(1, 5, 2);
        let cu = partition_grid(&mu, &p).unwrap();
        let cv = partition_grid(&mv, &p).unwrap();
        let top_u: Vec<u16> = cell_top_codes(&cu[0], 5).iter().map(|t| t.0).collect();
        let top_v: Vec<u16> = cell_top_codes(&cv[0], 5).iter().map(|t| t.0).collect();
        assert_eq!(top_u, vec![3, 7, 9, 12, 40]);
        assert_eq!(top_v, vec![7, 9, 55, 60, 61]);
        let oracle = top_u.iter().filter(|c| top_v.contains(c)).count();
        assert_eq!(oracle, 2);
        assert_eq!(cell_similar(&cu[0], &cv[0], &p), (true, 2));
    }

    #[test]
    fn shape_mismatch() {
        let u = map(5, 5, vec![0; 25]);
        let v = map(5, 10, vec![0; 50]);
        assert!(matches!(
            map_similarity(&u, &v, &params(5, 5, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn breakdown_counts_cells() {
        // 2x2 grid of 2x2 cells; only the top-left cell differs entirely
        let u = map(4, 4, vec![0, 1, 2, 3, 0, 1, 2, 3, 4, 5, 6, 7, 4, 5, 6, 7]);
        let mut vi = u.indices().to_vec();
        for i in [0usize, 1, 4, 5] {
            vi[i] += 100;
        }
        let v = map(4, 4, vi);
        let b = compare_maps(&u, &v, &params(2, 2, 2)).unwrap();
        assert_eq!(b.similar, vec![false, true, true, true]);
        assert_eq!(b.overlaps, vec![0, 2, 2, 2]);
        assert_eq!(b.score(), 0.75);
    }
}
