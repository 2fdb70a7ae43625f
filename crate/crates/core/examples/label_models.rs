//! Datasets under each label model, with the OPT reference that goes with it.
//!
//! ```bash
//! cargo run --release --example label_models
//! ```

use relu_gd_lab::labels::{LabelVariant, NoiseKind};
use relu_gd_lab::oracles::empirical_loss;
use relu_gd_lab::{generate_dataset, opt_reference, HypothesisSet, Instance, LabelModel, MarginalSpec, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let v = WeightVector::new(vec![1.0, 0.0], 0.2)?;
    let models = [
        LabelModel::realizable(),
        LabelModel::with_opt(0.01),
        LabelModel {
            variant: LabelVariant::AdditiveNoise(NoiseKind::UniformBounded { half_width: 0.3 }),
            clip_bound: None,
        },
        LabelModel::with_opt(0.01).with_clip(1.5),
        LabelModel {
            variant: LabelVariant::MisspecifiedTeacher {
                v_alt: WeightVector::new(vec![0.0, 1.0], 0.0)?,
                mix_prob: 0.1,
            },
            clip_bound: None,
        },
        LabelModel {
            variant: LabelVariant::RegionFlip {
                flip_radius: 0.5,
                flip_magnitude: 1.0,
            },
            clip_bound: None,
        },
    ];
    for model in models {
        let inst = Instance::new(MarginalSpec::gaussian(2), v.clone(), model, HypothesisSet::default())?;
        let ds = generate_dataset(&inst, 20_000, 1)?;
        let opt = opt_reference(&inst);
        println!(
            "{:<60} OPT({:?}) = {:.5}   empirical L(v) = {:.5}",
            inst.label_model.to_string(),
            opt.mode,
            opt.value,
            empirical_loss(&v, &ds)?
        );
    }
    Ok(())
}
