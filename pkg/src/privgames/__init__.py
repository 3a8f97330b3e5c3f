"""Record-specific membership-inference risk evaluation for synthetic data.

The package runs per-record privacy games against a fitted synthetic data
generator and turns the resulting guess transcripts into risk estimates.
Two games are provided: the traditional dataset-resampling game, whose
per-record risk is an average over training datasets, and a model-seeded
game that holds the released model's training dataset fixed and isolates
the risk of the actual release.  Analytic oracles for small generators
let tests pin empirical results against exact targets.
"""

__version__ = "0.1.0"
