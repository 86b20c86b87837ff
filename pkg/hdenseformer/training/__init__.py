from .schedule import *
from .optim import *
from .checkpoint import *
from .run_config import *
from .trainer import *
from .evaluate import *
