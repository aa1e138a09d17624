"""bargecast: reconstruct inland-waterway tow trajectories from AIS data,
pair them with bridge-point barge observations, and train/serve a two-stage
classifier for barge presence and barge count.

Submodules map to the processing stages:

- ais: CSV ingest, cleaning rules, channel buffer, trip splitting
- geo: great-circle geometry, river segmentation, average path, arrivals
- matching: camera-observation to trip matching and labeled-dataset emission
- features: the 36-slot per-trip feature registry and extraction
- prep: binning, imputation, downsampling, SMOTE, weights, splits and folds
- learners: from-scratch CART / RF / AdaBoost / GBDT / KNN and stacking
- tuning: cross-validation, TPE hyperparameter search, RFE
- metrics: confusion matrices, P/R/F1, accuracy, ROC-AUC, reports
- hierarchy: the presence -> quantity two-stage model and its artifact
- synth: synthetic river/vessel/observation scenario generator
- pipeline: end-to-end training plus the three study harnesses
- cli: the bargecast command-line tool
"""

__version__ = "0.1.0"

from . import ais, features, geo, hierarchy, learners, matching, metrics, pipeline, prep, synth, tuning  # noqa: F401
from ._util import DataError  # noqa: F401
