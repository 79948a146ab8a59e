#
# Scenario files
#
# A scenario is an INI document with three sections:
#
#   [model]     kind = explicit-rank | tree | cluster | cardinality-rank
#                      | random-cluster, plus the parameters of the kind
#   [workload]  intensity, or arrival and size (optional for some solvers)
#   [solver]    name = exact | polysym | bounds | simulate | concentration,
#               plus solver options
#
# Lists are comma separated, families of sets are ';'-separated comma
# lists of 1-based indices, tables are one 'key: value' entry per
# (indented) line. See README.rst for the full schema.
#

import configparser
import re

from polyfair.errors import ScenarioError

SECTIONS = ('model', 'workload', 'solver')


def _int(text):
    return int(text)


def _float(text):
    return float(text)


def _str(text):
    return text.strip()


def _int_list(text):
    return [int(v) for v in text.split(',') if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _index_set(text):
    text = text.strip()
    if text in ('', '{}', '-'):
        return []
    indices = []
    for v in text.split(','):
        i = int(v)
        if i < 1:
            raise ValueError("indices start at 1, got %d" % i)
        indices.append(i - 1)
    return indices


def _set_family(text):
    return [_index_set(part) for part in text.split(';') if part.strip()]


def _table_lines(text):
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if ':' not in line:
            raise ValueError("table entry %r is not 'key: value'" % line)
        key, value = line.rsplit(':', 1)
        yield key.strip(), value.strip()


def _set_table(text):
    """
    'i,j: value' lines; '{}' or '-' is the empty set.
    """
    return [(_index_set(key), float(value)) for key, value in _table_lines(text)]


def _profile_table(text):
    return [(tuple(_int_list(key)), float(value))
            for key, value in _table_lines(text)]


def _group_table(text):
    return [(int(key), float(value)) for key, value in _table_lines(text)]


SCHEMA = {
    'model': {
        'kind': _str,
        'n': _int,
        'rank': _set_table,
        'links': _set_table,
        'servers': _int,
        'server_capacity': _float_list,
        'assign': _set_family,
        'partition': _set_family,
        'form': _str,
        'sizes': _int_list,
        'rates': _float_list,
        'shared': _float,
        'd1': _int,
        'd2': _int,
        'h': _profile_table,
        'degrees': _int_list,
        'groups': _group_table,
    },
    'workload': {
        'intensity': _float_list,
        'arrival': _float_list,
        'size': _float_list,
    },
    'solver': {
        'name': _str,
        'epsilon': _float_list,
        'alphas': _float_list,
        'alpha_points': _int,
        'components': _int,
        'attempts': _int,
        'distribution': _str,
        'events': _int,
        'warmup': _float,
        'batches': _int,
        'cap': _int,
        'trials': _int,
        'subsets_per_profile': _int,
        'degree_factor': _float,
        'server_factor': _float,
        'ns': _int_list,
        'truncation': _int,
        'seed': _int,
        'threads': _int,
        'format': _str,
        'out_dir': _str,
        'grid_csv_max_cells': _int,
    },
}

# params keys that differ from their scenario name
RENAMED = {('model', 'kind'): 'model', ('solver', 'name'): 'solver'}

REQUIRED = [('model', 'kind'), ('solver', 'name')]

_SECTION_RE = re.compile(r'^\s*\[([^\]]+)\]')
_KEY_RE = re.compile(r'^([^\s=:#;][^=:]*?)\s*[=:]')


def _key_lines(text):
    """
    Line number (1-based) of every 'key =' entry, by section.
    """
    lines = {}
    section = None
    for number, line in enumerate(text.splitlines(), 1):
        match = _SECTION_RE.match(line)
        if match:
            section = match.group(1).strip()
            continue
        match = _KEY_RE.match(line)
        if match and section is not None:
            lines.setdefault((section, match.group(1).strip().lower()), number)
    return lines


def param_name(section, key):
    return RENAMED.get((section, key), key)


def field_error(params, field, message):
    """
    ScenarioError pointing at a field ('section.key') of the scenario
    that produced params.
    """
    section, key = field.split('.', 1)
    line = params.get('_lines', {}).get((section, key))
    context = {'field': field}
    if line is not None:
        context['line'] = line
        message = "line %d: %s" % (line, message)
    return ScenarioError(message, **context)


def parse_scenario(text, source='<scenario>'):
    """
    Parses scenario text into a flat params dictionary. '_lines' maps
    (section, key) to the line of each entry for later diagnostics.
    """
    parser = configparser.ConfigParser(interpolation=None,
                                       comment_prefixes=('#',),
                                       inline_comment_prefixes=('#',))
    try:
        parser.read_string(text, source=source)
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else getattr(e, "lineno", None)
        raise ScenarioError("%s: cannot parse line %s" % (source, line),
                            line=line)
    except configparser.Error as e:
        line = getattr(e, 'lineno', None)
        raise ScenarioError("%s: %s" % (source, e.message), line=line)

    lines = _key_lines(text)
    params = {'_lines': lines}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ScenarioError(
                "%s: unknown section [%s]" % (source, section),
                field=section)
        for key, raw in parser.items(section):
            field = "%s.%s" % (section, key)
            line = lines.get((section, key))
            where = "line %d" % line if line else source
            if key not in SCHEMA[section]:
                raise ScenarioError("%s: unknown field %s" % (where, field),
                                    field=field, line=line)
            try:
                value = SCHEMA[section][key](raw)
            except ValueError as e:
                raise ScenarioError("%s: bad value for %s: %s"
                                    % (where, field, e),
                                    field=field, line=line)
            params[param_name(section, key)] = value

    for section, key in REQUIRED:
        if param_name(section, key) not in params:
            raise ScenarioError("%s: missing field %s.%s"
                                % (source, section, key),
                                field="%s.%s" % (section, key))
    return params


def read_scenario(path):
    try:
        with open(path) as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise ScenarioError("cannot read scenario %s: %s" % (path, e),
                            path=path)
    return parse_scenario(text, source=path)
