//! Ordering construction as a sequential decision process.
//!
//! A state pairs the inserted vertex sequence with the partial diagram
//! (relaxed for upper bounds, restricted for lower bounds); an action
//! inserts one more vertex. The reward is the negated bound increment when
//! bounding from above and the bound increment when bounding from below,
//! so an episode's return is minus the final relaxed bound, or the final
//! restricted bound.

use crate::dd::DecisionDiagram;
use crate::models::DpModel;
use crate::{Error, Graph, Mcp, Misp, Problem, Result, Sense};

/// Replay sample. The successor state is `inserted_before` plus `action`;
/// the diagram itself is not stored since the Q-network never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub graph_id: usize,
    pub inserted_before: Vec<usize>,
    pub action: usize,
    /// Scaled reward.
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Env<M: DpModel> {
    dd: DecisionDiagram<M>,
    sense: Sense,
}

impl<M: DpModel> Env<M> {
    pub fn reset(model: M, sense: Sense, width: usize) -> Result<Self> {
        Ok(Env {
            dd: DecisionDiagram::new(model, sense.mode(width))?,
            sense,
        })
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn diagram(&self) -> &DecisionDiagram<M> {
        &self.dd
    }

    /// Inserted vertices in insertion order.
    pub fn inserted(&self) -> &[usize] {
        self.dd.ordering()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.dd.remaining()
    }

    pub fn is_terminal(&self) -> bool {
        self.dd.is_complete()
    }

    /// Current partial bound of the diagram.
    pub fn bound(&self) -> i64 {
        self.dd.bound()
    }

    /// Inserts `action` and returns the (unscaled) reward.
    pub fn step(&mut self, action: usize) -> Result<i64> {
        let delta = self.dd.insert(action)?;
        Ok(match self.sense {
            Sense::Ub => -delta,
            Sense::Lb => delta,
        })
    }
}

/// Environment over either problem, for code that picks the problem at run
/// time.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Misp(Env<Misp>),
    Mcp(Env<Mcp>),
}

macro_rules! dispatch {
    ($self:expr, $env:ident => $body:expr) => {
        match $self {
            AnyEnv::Misp($env) => $body,
            AnyEnv::Mcp($env) => $body,
        }
    };
}

impl AnyEnv {
    pub fn reset(problem: Problem, g: &Graph, sense: Sense, width: usize) -> Result<Self> {
        Ok(match problem {
            Problem::Misp => AnyEnv::Misp(Env::reset(Misp::new(g), sense, width)?),
            Problem::Mcp => AnyEnv::Mcp(Env::reset(Mcp::new(g), sense, width)?),
        })
    }

    pub fn inserted(&self) -> &[usize] {
        dispatch!(self, e => e.inserted())
    }

    pub fn actions(&self) -> Vec<usize> {
        dispatch!(self, e => e.actions())
    }

    pub fn is_terminal(&self) -> bool {
        dispatch!(self, e => e.is_terminal())
    }

    pub fn bound(&self) -> i64 {
        dispatch!(self, e => e.bound())
    }

    pub fn step(&mut self, action: usize) -> Result<i64> {
        if !self.actions().contains(&action) {
            return Err(Error::AlreadyInserted(action));
        }
        dispatch!(self, e => e.step(action))
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        dispatch!(self, e => e.diagram().layer_widths())
    }
}
