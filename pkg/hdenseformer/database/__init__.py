from .session import *
from .models import *
from .records import *
