use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CellConfig, TrafficFill, SYMBOLS_PER_SUBFRAME};
use super::crs::{CrsTable, CRS_SYMBOLS};
use super::pss::{carries_pss, in_pss_band, pss_first_subcarrier, pss_generate};
use crate::error::Result;

/// Subcarrier x symbol matrix covering whole subframes.
///
/// Stored symbol-major: all subcarriers of symbol 0, then symbol 1, and so
/// on. `first_subframe` is the absolute index of the first subframe; its
/// value mod 10 selects the CRS slot numbers and PSS occurrences.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceGrid {
    pub config: CellConfig,
    pub first_subframe: usize,
    n_symbols: usize,
    cells: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn zeros(config: &CellConfig, first_subframe: usize, n_subframes: usize) -> Self {
        let n_symbols = n_subframes * SYMBOLS_PER_SUBFRAME;
        Self {
            config: config.clone(),
            first_subframe,
            n_symbols,
            cells: vec![Complex64::new(0.0, 0.0); n_symbols * config.n_subcarriers()],
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.config.n_subcarriers()
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subframes(&self) -> usize {
        self.n_symbols / SYMBOLS_PER_SUBFRAME
    }

    pub fn get(&self, k: usize, symbol: usize) -> Complex64 {
        self.cells[symbol * self.n_subcarriers() + k]
    }

    pub fn set(&mut self, k: usize, symbol: usize, v: Complex64) {
        let n = self.n_subcarriers();
        self.cells[symbol * n + k] = v;
    }

    pub fn symbol(&self, symbol: usize) -> &[Complex64] {
        let n = self.n_subcarriers();
        &self.cells[symbol * n..(symbol + 1) * n]
    }

    pub fn symbol_mut(&mut self, symbol: usize) -> &mut [Complex64] {
        let n = self.n_subcarriers();
        &mut self.cells[symbol * n..(symbol + 1) * n]
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    /// Frobenius norm of the whole grid.
    pub fn norm(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Relative Frobenius error `||self - other|| / ||other||`.
    pub fn relative_error(&self, other: &ResourceGrid) -> f64 {
        let diff: f64 = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        diff.sqrt() / other.norm()
    }

    /// Absolute subframe index and in-subframe symbol of grid symbol `symbol`.
    pub fn locate(&self, symbol: usize) -> (usize, usize) {
        (
            self.first_subframe + symbol / SYMBOLS_PER_SUBFRAME,
            symbol % SYMBOLS_PER_SUBFRAME,
        )
    }
}

/// Grid of `n_subframes` subframes starting at subframe 0 of a radio frame.
pub fn build_grid(config: &CellConfig, n_subframes: usize) -> Result<ResourceGrid> {
    build_grid_at(config, 0, n_subframes)
}

/// Grid starting at absolute subframe `first_subframe`. Traffic is drawn
/// per subframe, so any split of a long run into shorter grids yields the
/// same cells.
pub fn build_grid_at(config: &CellConfig, first_subframe: usize, n_subframes: usize) -> Result<ResourceGrid> {
    config.validate()?;
    let table = CrsTable::new(config)?;
    let pss = pss_generate(config.nid2())?;
    let mut grid = ResourceGrid::zeros(config, first_subframe, n_subframes);
    let n_sc = config.n_subcarriers();
    let pss_k0 = pss_first_subcarrier(config);

    for s in 0..n_subframes {
        let sf = first_subframe + s;
        let mut rng = ChaCha8Rng::seed_from_u64(config.traffic_seed);
        rng.set_stream(sf as u64);
        for sym in 0..SYMBOLS_PER_SUBFRAME {
            let row = grid.symbol_mut(s * SYMBOLS_PER_SUBFRAME + sym);
            let pss_here = carries_pss(config, sf, sym);
            if config.traffic_fill == TrafficFill::RandomQpsk {
                for (k, cell) in row.iter_mut().enumerate() {
                    let bits: u8 = rng.gen();
                    if pss_here && in_pss_band(config, k) {
                        continue;
                    }
                    let re = if bits & 1 == 0 { 1.0 } else { -1.0 };
                    let im = if bits & 2 == 0 { 1.0 } else { -1.0 };
                    *cell = Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
                }
            }
            if CRS_SYMBOLS.contains(&sym) {
                for (&k, &v) in table.subcarriers(sym)?.iter().zip(table.values(sf, sym)?) {
                    row[k] = v;
                }
            }
            if pss_here {
                row[pss_k0..pss_k0 + pss.len()].copy_from_slice(&pss);
            }
            debug_assert_eq!(row.len(), n_sc);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_pss(pci: u16, fill: TrafficFill) -> CellConfig {
        CellConfig {
            pci,
            traffic_fill: fill,
            with_pss: false,
            ..CellConfig::default()
        }
    }

    #[test]
    fn pilot_count_one_subframe() {
        let g = build_grid(&no_pss(0, TrafficFill::Empty), 1).unwrap();
        let nz = g.cells().iter().filter(|c| c.norm() > 0.0).count();
        assert_eq!(nz, 200);
    }

    #[test]
    fn empty_fill_leaves_only_pilots_and_pss() {
        let c = CellConfig {
            traffic_fill: TrafficFill::Empty,
            ..CellConfig::default()
        };
        let g = build_grid(&c, 10).unwrap();
        // 10 subframes of pilots plus two PSS symbols
        let nz = g.cells().iter().filter(|c| c.norm() > 0.0).count();
        assert_eq!(nz, 10 * 200 + 2 * 62);
    }

    #[test]
    fn traffic_is_independent_of_grid_split() {
        let c = no_pss(7, TrafficFill::RandomQpsk);
        let whole = build_grid_at(&c, 3, 4).unwrap();
        let a = build_grid_at(&c, 3, 2).unwrap();
        let b = build_grid_at(&c, 5, 2).unwrap();
        let n = a.cells().len();
        assert_eq!(&whole.cells()[..n], a.cells());
        assert_eq!(&whole.cells()[n..], b.cells());
    }

    #[test]
    fn pss_guard_is_empty_under_traffic() {
        let c = CellConfig::default();
        let g = build_grid(&c, 1).unwrap();
        for k in 114..119 {
            assert_eq!(g.get(k, 6), Complex64::new(0.0, 0.0));
        }
        assert!((g.get(113, 6).norm() - 1.0).abs() < 1e-12);
    }
}
