from .modality import *
from .mvol import *
from .synth import *
from .augment import *
from .dataset import *
