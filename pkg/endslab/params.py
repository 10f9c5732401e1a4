"""
Model parameters for the two-ended manifold and the flat key=value
configuration file they are loaded from.

Each parameter is a descriptor on its owning class. Values are converted
and checked once, at construction; afterwards a parameter set is
immutable, so it can be shared between threads and used as a cache key.
"""

import io
import logging
import re

logger = logging.getLogger(__name__)


class InvalidConfig(Exception):
    """Raised if a parameter, configuration file or literal is malformed."""
    pass


class ParamDescriptor(object):
    """Generic descriptor class for accessing one named parameter."""
    def __init__(self, name, default):
        self.name = name
        self.default = default

    def __get__(self, instance, owner=None):
        if instance is None:
            return self
        return instance._values[self.name]

    def __set__(self, instance, value):
        raise AttributeError('Parameter is read-only')

    def from_text(self, value):
        """Default converter for reading a configuration string.

        Can be overridden in subclasses to provide custom conversion.
        """
        return str(value)

    def to_text(self, value):
        """Default converter for writing a configuration string."""
        return str(value)

    def validate(self, value):
        """Converts a user value, raising InvalidConfig if it is unusable."""
        if isinstance(value, str):
            try:
                value = self.from_text(value.strip())
            except ValueError:
                raise InvalidConfig("Invalid value for {0}: {1!r}".format(
                    self.name, value))
        return self.check(value)

    def check(self, value):
        return value


class IntegerParam(ParamDescriptor):
    """Integer parameter with optional inclusive bounds."""
    def __init__(self, name, default, minimum=None, maximum=None):
        super(IntegerParam, self).__init__(name, default)
        self.minimum = minimum
        self.maximum = maximum

    def from_text(self, value):
        return int(value)

    def check(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            # Accept integral floats such as 3.0 coming from numpy scans.
            try:
                if float(value) != int(value):
                    raise ValueError
            except (TypeError, ValueError):
                raise InvalidConfig('{0} must be an integer'.format(self.name))
            value = int(value)

        if (self.minimum is not None) and (value < self.minimum):
            raise InvalidConfig('{0} must be at least {1}'.format(
                self.name, self.minimum))
        if (self.maximum is not None) and (value > self.maximum):
            raise InvalidConfig('{0} must be at most {1}'.format(
                self.name, self.maximum))
        return value


class FloatParam(ParamDescriptor):
    """Real parameter, strictly above `lower` and at most `upper`."""
    def __init__(self, name, default, lower=None, upper=None):
        super(FloatParam, self).__init__(name, default)
        self.lower = lower
        self.upper = upper

    def from_text(self, value):
        return float(value)

    def to_text(self, value):
        return repr(float(value))

    def check(self, value):
        if isinstance(value, bool):
            raise InvalidConfig('{0} must be a number'.format(self.name))
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise InvalidConfig('{0} must be a number'.format(self.name))

        if value != value or value in (float('inf'), float('-inf')):
            raise InvalidConfig('{0} must be finite'.format(self.name))
        if (self.lower is not None) and not (value > self.lower):
            raise InvalidConfig('{0} must be greater than {1}'.format(
                self.name, self.lower))
        if (self.upper is not None) and (value > self.upper):
            raise InvalidConfig('{0} must not exceed {1}'.format(
                self.name, self.upper))
        return value


# One key=value pair per line; everything after '#' is a comment.
LINE_PATTERN = re.compile(r"""
    ^\s*
    (?P<key>[A-Za-z_][A-Za-z0-9_]*) # Parameter name.
    \s*=\s*
    (?P<value>[^\#]*?)              # Value, up to an optional comment.
    \s*(?:\#.*)?$
""", re.VERBOSE)


def parse_config(text):
    """Splits configuration text into a dictionary of raw string values."""
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue

        match = LINE_PATTERN.match(line)
        if match is None:
            raise InvalidConfig("Line {0}: expected key=value, got {1!r}".format(
                number, stripped))

        key = match.group('key')
        if key in values:
            raise InvalidConfig("Line {0}: duplicate key {1}".format(number,
                                                                     key))
        values[key] = match.group('value')

    return values


class ParamSet(object):
    """Base class for an immutable, validated group of parameters.

    Subclasses list their descriptor names in KEYS, which also fixes the
    order used when writing configuration files.
    """
    KEYS = ()

    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(self.KEYS))
        if unknown:
            raise InvalidConfig('Unknown parameter(s): {0}'.format(
                ', '.join(unknown)))

        self._values = {}
        for key in self.KEYS:
            desc = self.descriptor(key)
            value = kwargs.get(key)
            if value is None:
                value = desc.default
            self._values[key] = desc.validate(value)

        self.check()

    @classmethod
    def descriptor(cls, key):
        for klass in cls.__mro__:
            if key in vars(klass):
                return vars(klass)[key]
        raise KeyError(key)

    def check(self):
        """Hook for invariants spanning several parameters."""
        pass

    @classmethod
    def load(cls, source, **overrides):
        """Reads a key=value file, then applies non-None overrides.

        The source may be a path or an open text buffer.
        """
        # Accept both filename strings for normal usage, and buffer objects
        # for unit tests.
        try:
            f = io.open(source, encoding='UTF-8')
        except TypeError:
            f = source
        except (IOError, OSError) as e:
            raise InvalidConfig('Cannot read configuration: {0}'.format(e))

        with f:
            values = parse_config(f.read())

        values.update((k, v) for k, v in overrides.items() if v is not None)
        logger.debug('Loaded %s from %r', cls.__name__, source)
        return cls(**values)

    def dump(self, buf):
        """Writes the parameters in the format accepted by load()."""
        for key in self.KEYS:
            text = self.descriptor(key).to_text(self._values[key])
            buf.write(u'{0}={1}\n'.format(key, text))

    def replace(self, **overrides):
        """Returns a copy with the given non-None values substituted."""
        values = self.as_dict()
        values.update((k, v) for k, v in overrides.items() if v is not None)
        return type(self)(**values)

    def as_dict(self):
        return dict((key, self._values[key]) for key in self.KEYS)

    def key(self):
        return tuple(self._values[key] for key in self.KEYS)

    def __eq__(self, other):
        return (type(self) is type(other)) and (self.key() == other.key())

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((type(self).__name__, self.key()))

    def __repr__(self):
        fields = ', '.join('{0}={1!r}'.format(k, self._values[k])
                           for k in self.KEYS)
        return '{0}({1})'.format(type(self).__name__, fields)


class ModelParams(ParamSet):
    """Dimensions, core geometry, tolerances and seed of one model."""
    KEYS = ('n', 'm', 'delta_K', 'mu_K', 'sphere_radius', 'quad_tol',
            'quad_max_depth', 'seed')

    n = IntegerParam('n', 3, minimum=3)
    m = IntegerParam('m', 5, minimum=4)
    delta_K = FloatParam('delta_K', 1.0, lower=0.0)
    mu_K = FloatParam('mu_K', 1.0, lower=0.0)
    sphere_radius = FloatParam('sphere_radius', 1.0, lower=0.0)
    quad_tol = FloatParam('quad_tol', 1e-8, lower=0.0, upper=1e-2)
    quad_max_depth = IntegerParam('quad_max_depth', 40, minimum=1)
    seed = IntegerParam('seed', 0, minimum=0, maximum=2 ** 64 - 1)

    def check(self):
        if not self.n < self.m:
            raise InvalidConfig('Dimensions must satisfy 2 < n < m')

    @property
    def k(self):
        """Dimension of the sphere factor of the small end."""
        return self.m - self.n


class KernelConstants(ParamSet):
    """Amplitude and Gaussian rate shared by every heat kernel regime."""
    KEYS = ('C_k', 'c_k')

    C_k = FloatParam('C_k', 1.0, lower=0.0)
    c_k = FloatParam('c_k', 0.25, lower=0.0)
