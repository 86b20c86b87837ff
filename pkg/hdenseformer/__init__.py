from .shared import *
from .enums import *
from .exceptions import *
from .events import *
from .config import *
from .dct import *
from .mpe import *
from .backbone import *
from .model import *
from .loss import *
from .metrics import *
from .complexity import *
from .data import *
from .database import *
from .training import *
from .gradcheck_suites import *
from .command import *
from .cli import *
from . import tensor
from . import nn
from .tensor import Tensor, GradCheckReport, grad_check, grad_check_module
from .nn import Module, Parameter
