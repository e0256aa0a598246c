//! Resource caps for the exhaustive searches.
//!
//! The defaults keep every operation at desk-scale runtimes; the CLI exposes
//! them through `--caps` so a patient user can raise a single knob without
//! rebuilding.

/// Hard limits checked by the enumerating operations. Exceeding a cap is an
/// error, never a silent truncation.
#[derive(Debug, Clone)]
pub struct Caps {
    /// Ambient dimension cap for full subspace enumeration.
    pub enum_dim: usize,
    /// Subspace dimension cap for span/odd-set enumeration.
    pub span_dim: usize,
    /// Arity cap for exact protocol-error evaluation (cost `4^n`).
    pub comm_arity: usize,
    /// Arity cap for the exhaustive one-bit message search (cost `2^{2^n}`).
    pub onebit_arity: usize,
    /// Arity cap for full affine-subspace enumeration.
    pub affine_arity: usize,
    /// Codimension cap for the restricted affine scan above `affine_arity`.
    pub affine_codim: usize,
    /// Cell-count cap for the block matrix product construction.
    pub superslam_cells: u128,
    /// Subspace-count cap for exhaustive weight searches.
    pub search_subspaces: u128,
    /// Width cap for table-backed sketch decoders.
    pub decoder_width: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enum_dim: 14,
            span_dim: 20,
            comm_arity: 13,
            onebit_arity: 4,
            affine_arity: 8,
            affine_codim: 3,
            superslam_cells: 1 << 28,
            search_subspaces: 1 << 27,
            decoder_width: 24,
        }
    }
}

impl Caps {
    /// Parse a comma-separated `key=value` override list, e.g.
    /// `enum-dim=16,comm-arity=14`.
    pub fn parse_overrides(&mut self, spec: &str) -> Result<(), String> {
        for item in spec.split(',').filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got '{item}'"))?;
            let v: u128 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad value for '{key}': '{value}'"))?;
            match key.trim() {
                "enum-dim" => self.enum_dim = v as usize,
                "span-dim" => self.span_dim = v as usize,
                "comm-arity" => self.comm_arity = v as usize,
                "onebit-arity" => self.onebit_arity = v as usize,
                "affine-arity" => self.affine_arity = v as usize,
                "affine-codim" => self.affine_codim = v as usize,
                "superslam-cells" => self.superslam_cells = v,
                "search-subspaces" => self.search_subspaces = v,
                "decoder-width" => self.decoder_width = v as usize,
                other => return Err(format!("unknown cap '{other}'")),
            }
        }
        Ok(())
    }
}
