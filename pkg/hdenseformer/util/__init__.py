from .misc_util import *
