"""Multi-platform ensemble bot detector.

Per-field classifiers over username, screen name, description, account
metadata and posts, averaged over whichever fields a user actually has.
"""

__version__ = "0.1.0"

from .ensemble import EnsembleModel, Prediction, TrainConfig, predict_batch, predict_user, train_ensemble
from .errors import BotDetectorError, DataError
from .modelstore import load_model, save_model
from .records import FieldMapping, Label, PlatformKind, UserRecord, harmonize, read_records

__all__ = [
    "BotDetectorError", "DataError", "EnsembleModel", "FieldMapping", "Label", "PlatformKind",
    "Prediction", "TrainConfig", "UserRecord", "harmonize", "load_model", "predict_batch",
    "predict_user", "read_records", "save_model", "train_ensemble",
]
