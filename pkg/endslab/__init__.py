__version__ = '1.0'

from .params import (InvalidConfig, KernelConstants, ModelParams)
from .quadrature import (ConvergenceError, DivergenceError)
from .geometry import (Ball, EmbeddedPoint, Model, PowerSegment, RadialPoint,
                       Region)
from .functions import (RadialFunction, parse_function, standard_family)
from .maximal import (InfeasibleTarget, MaximalProfile, SearchConfig)
from .heat import (HeatConfig, KernelRegime)
from .weaktype import (DistributionProfile)
from .oracle import (McConfig, McEstimate)
