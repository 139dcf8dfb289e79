"""Machine-readable table of the benchmark's fixed constants.

Every environment and generator reads its numbers from here so that a single
table can be checked against the published values.
"""

ACTION_REG_COEF = 1e-3

GLIMPSE_STEP_SCALE = 0.2
LIGHTDARK_STEP_SCALE = 0.15
LIGHTDARK_BONUS = 0.1
LIDAR_BEAMS = 8

GEL_CLIP_MM = 4.25
PLATFORM_SIZE_MM = 100.0

STEP_LIMITS = {
    "CircleSquare-v0": 16,
    "MNIST-v0": 16,
    "CIFAR10-v0": 16,
    "TinyImageNet-v0": 16,
    "CIFAR10Loc-v0": 16,
    "TinyImageNetLoc-v0": 16,
    "LightDark-v0": 16,
    "LIDARLocMaze-v0": 16,
    "LIDARLocMazeStatic-v0": 16,
    "LIDARLocRooms-v0": 16,
    "LIDARLocRoomsStatic-v0": 16,
    "TactileMNIST-v0": 16,
    "Starstruck-v0": 32,
    "Toolbox-v0": 64,
    "TactileMNISTVolume-v0": 32,
}

# (image size, glimpse size, channels, classes)
IMAGE_TASKS = {
    "CircleSquare": (28, 5, 1, 2),
    "MNIST": (28, 5, 1, 10),
    "CIFAR10": (32, 5, 3, 10),
    "TinyImageNet": (64, 10, 3, 200),
}

MAP_SIZES = {"maze": 21, "rooms": 32}

CIRCLE_SQUARE_COUNT = 1568

MNIST3D_TOTAL = 13580
MNIST3D_CLASSES = 10
MNIST3D_SPLITS = {
    "train": 1148,
    "test": 100,
    "holdout": 50,
    "printed_train": 50,
    "printed_test": 10,
}
MNIST3D_MM_PER_PIXEL = 0.2
MNIST3D_IMAGE_SIZE = 500

STARSTRUCK_TOTAL = 3300
STARSTRUCK_TEST = 300
STARSTRUCK_MAX_DISTRACTORS = 5
STARSTRUCK_MAX_STARS = 3
STARSTRUCK_PLACEMENT_ATTEMPTS = 100

TOOLBOX_VARIANTS = 4

SPEC_VERSION = "1"


def as_dict():
    """All public constants as a plain dict (for dumping and comparison)."""
    return {k: v for k, v in globals().items() if k.isupper()}
