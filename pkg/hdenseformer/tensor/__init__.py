from .tensor import *
from .ops import *
from .conv import *
from .resize import *
from .gradcheck import *
