use serde::{Deserialize, Serialize};

use super::util::{expect_rank, f64s};
use super::{Effect, FnOp, Operation, ParamError, Params, PlotPoint};
use crate::graph::{PortSpec, PortType, Signature};
use crate::tensor::DType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotMode {
    /// The current frame's vector plotted against element index.
    Lines,
    /// One `(frame, value)` point appended per executed frame.
    LinesAccumulate,
}

impl PlotMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lines" => Some(PlotMode::Lines),
            "lines_accumulate" => Some(PlotMode::LinesAccumulate),
            _ => None,
        }
    }
}

pub fn plot_mode(p: &Params) -> Result<PlotMode, ParamError> {
    let s = p.str_or("mode", "lines_accumulate")?;
    PlotMode::parse(s).ok_or_else(|| ParamError::new("mode", format!("unknown plot mode `{s}`")))
}

pub fn plot_data(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["mode"])?;
    let mode = plot_mode(p)?;
    let rank = match mode {
        PlotMode::LinesAccumulate => 0,
        PlotMode::Lines => 1,
    };
    let sig = Signature::new(vec![PortSpec::new("value", PortType::new(DType::F64, rank))], vec![]);
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let t = &inputs[0];
        expect_rank(t, rank)?;
        let values = f64s(t, "value")?;
        let point = match mode {
            PlotMode::LinesAccumulate => PlotPoint::Append(values[0]),
            PlotMode::Lines => PlotPoint::Replace(values.to_vec()),
        };
        ctx.emit(Effect::Plot(point));
        Ok(vec![])
    })
    .boxed())
}
