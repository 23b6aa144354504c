//! Time-indexed probability tables, the common result format of every solver.

use std::io::Write;

use crate::error::Result;

/// One probability vector inside a table row: an agent's distribution over
/// states, or the whole network distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub entity: String,
    pub states: Vec<String>,
}

/// A long-format record as emitted to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<'a> {
    pub t: f64,
    pub agent: &'a str,
    pub state: &'a str,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    blocks: Vec<Block>,
    times: Vec<f64>,
    /// `rows[k]` concatenates the blocks at `times[k]`.
    rows: Vec<Vec<f64>>,
}

impl TrajectoryTable {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.blocks.iter().map(|b| b.states.len()).sum()
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        assert_eq!(row.len(), self.width(), "row width does not match blocks");
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The row recorded at index `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Last recorded row.
    pub fn last_row(&self) -> Option<&[f64]> {
        self.rows.last().map(Vec::as_slice)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let start = acc;
                acc += b.states.len();
                start
            })
            .collect()
    }

    /// The slice of row `k` belonging to block `b`.
    pub fn block_values(&self, k: usize, b: usize) -> &[f64] {
        let start = self.offsets()[b];
        &self.rows[k][start..start + self.blocks[b].states.len()]
    }

    /// Largest deviation from 1 of any block sum over all rows.
    pub fn max_normalization_error(&self) -> f64 {
        let offsets = self.offsets();
        self.rows
            .iter()
            .flat_map(|row| {
                self.blocks.iter().zip(&offsets).map(move |(b, &start)| {
                    (row[start..start + b.states.len()].iter().sum::<f64>() - 1.0).abs()
                })
            })
            .fold(0.0, f64::max)
    }

    /// Entry-wise maximum absolute difference against a table of the same shape.
    pub fn max_abs_diff(&self, other: &TrajectoryTable) -> f64 {
        assert_eq!(self.len(), other.len());
        assert_eq!(self.width(), other.width());
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn records(&self) -> impl Iterator<Item = Record<'_>> + '_ {
        self.times.iter().zip(&self.rows).flat_map(move |(&t, row)| {
            let mut col = 0;
            self.blocks.iter().flat_map(move |block| {
                let start = col;
                col += block.states.len();
                block.states.iter().enumerate().map(move |(j, state)| Record {
                    t,
                    agent: &block.entity,
                    state,
                    probability: row[start + j],
                })
            })
        })
    }

    /// CSV with header `t,agent,state,probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        writer.write_record(["t", "agent", "state", "probability"])?;
        for rec in self.records() {
            writer.write_record([
                rec.t.to_string(),
                rec.agent.to_string(),
                rec.state.to_string(),
                rec.probability.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// CSV with header `agent,state,probability` from the last row only.
    pub fn write_final_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        writer.write_record(["agent", "state", "probability"])?;
        let last = self.len().saturating_sub(1);
        for rec in self.records().filter(|r| r.t == self.times[last]) {
            writer.write_record([
                rec.agent.to_string(),
                rec.state.to_string(),
                rec.probability.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Evenly spaced grid of `points` times over `[0, t_end]`.
pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..points)
            .map(|k| t_end * k as f64 / (points - 1) as f64)
            .collect(),
    }
}
