"""
Constants shared across the xbound_seg package.
"""

from enum import Enum

####################################################################################################
# DATASET FOLDERS
####################################################################################################


class Folders(Enum):
    """Enum for the dataset and artifact folders."""

    IMAGES = "images"
    MASKS = "masks"
    KEYPOINTS = "keypoints"
    OVERLAYS = "overlays"
    PREDICTIONS = "predictions"
    KEYMAPS = "keymaps"


class FileExts(Enum):
    IMAGES = ".png"
    MASKS = ".png"
    KEYPOINTS = ".png"
    OVERLAYS = ".png"
    PREDICTIONS = ".png"
    KEYMAPS = ".png"
    SPLIT = ".txt"


class Artifacts(Enum):
    """Fixed artifact names written under `--out`."""

    REPORT = "report.json"
    LOSS_LOG = "loss.csv"
    LOSS_PLOT = "loss.png"
    BEST_CKPT = "best.ckpt"
    LAST_CKPT = "last.ckpt"
    MANIFEST = "manifest.json"
    SWEEP_TABLE = "sweep.csv"
    SWEEP_SUMMARY = "sweep.json"
    SWEEP_PLOT = "sweep.png"


class Splits(Enum):
    TRAIN = "train"
    VAL = "val"


####################################################################################################
# MODEL CONSTANTS
####################################################################################################

N_SCALES = 4
# Each scale l (1..4) sits at input_size / 2 ** (l + 1)
SCALE_STRIDES = tuple(2 ** (l + 1) for l in range(1, N_SCALES + 1))
LN_EPS = 1e-6
DICE_EPS = 1.0
BCE_CLAMP = 1e-7

####################################################################################################
# CHECKPOINT CONSTANTS
####################################################################################################

CKPT_MAGIC = b"XBF1"
CKPT_VERSION = 1

####################################################################################################
# IMAGE CONSTANTS
####################################################################################################

MASK_BINARY_THRESH = 128
MASK_MAX = 255
# RGB levels of the synthetic skin and lesion. Channel 0 is the lesion channel.
SKIN_RGB = (0.85, 0.66, 0.56)
LESION_RGB = (0.35, 0.22, 0.16)
HAIR_RGB = (0.08, 0.06, 0.05)
TEXTURE_AMPLITUDE = 0.08
LESION_CHANNEL = 0

####################################################################################################
# PLOT CONSTANTS
####################################################################################################

PLOT_STYLE = "whitegrid"
PLOT_DPI = 75
CONTOUR_BGR = (0, 200, 0)
KEYPOINT_BGR = (0, 0, 255)
