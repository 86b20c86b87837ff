from . import misc_commands
from . import data_commands
from . import training_commands
from . import analysis_commands
