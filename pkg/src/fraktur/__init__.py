"""The main fraktur module."""
from fraktur.assembly import *
from fraktur.checks import *
from fraktur.config import *
from fraktur.constraints import *
from fraktur.control import *
from fraktur.energy import *
from fraktur.exceptions import *
from fraktur.fields import *
from fraktur.kkt import *
from fraktur.mesh import *
from fraktur.models import *
from fraktur.optimality import *
from fraktur.pdas import *
from fraktur.reduced import *
from fraktur.regularity import *
