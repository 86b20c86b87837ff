from .module import *
from .layers import *
