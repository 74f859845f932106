# Sphinx configuration for the pynorms documentation.
import os
import sys
from datetime import date

sys.path.insert(0, os.path.abspath('..'))
import pynorms  # noqa: E402

project = 'pynorms'
author = 'Contributors to pynorms'
copyright = f'{date.today().year}, {author}'
release = pynorms.__version__
version = '.'.join(release.split('.')[:2])

html_title = f'{project} {release}'
html_short_title = project
html_theme = 'furo'
htmlhelp_basename = 'pynormsdoc'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.viewcode',
    'sphinx_autodoc_typehints',
    'enum_tools.autoenum', # Manner and PolicyKind in grammar.rst
]

master_doc = 'index'
source_suffix = '.rst'
language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

# docstrings use Google-style sections (Args/Returns/Raises)
napoleon_google_docstring = True
napoleon_numpy_docstring = False

autodoc_typehints = 'description'
autodoc_inherit_docstrings = False
autodoc_default_options = {'member-order': 'bysource'}
autoclass_content = 'both'
always_use_bars_union = True
toc_object_entries_show_parents = 'hide'
