from app.experiments.base_experiment import BaseExperiment, ExperimentParam, ExperimentResult
from app.experiments.experiment_registry import ExperimentRegistry, experiment_registry
from app.experiments.pixel import PixelCode, decode_grid, encode_grid, image_distance
from app.experiments.report import ExperimentSpec, Report
from app.experiments.runner import run_all, run_named
