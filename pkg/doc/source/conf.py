# -*- coding: utf-8 -*-
#
# pinsim documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

import sphinx_bootstrap_theme

sys.path.insert(0, os.path.abspath('../..'))

import pinsim

html_theme = 'bootstrap'
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()

html_theme_options = dict(
    bootswatch_theme = "cerulean",
    navbar_sidebarrel = False,
    globaltoc_depth = 2,
    body_max_width="none",
)

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx.ext.autosummary',
]

numpydoc_show_class_members = False

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = 'pinsim'
copyright = '2026, the pinsim developers'
author = 'the pinsim developers'

version = pinsim.__version__
release = pinsim.__version__

language = 'en'

exclude_patterns = []

pygments_style = 'sphinx'

todo_include_todos = False

# -- Options for HTML output ----------------------------------------------

html_static_path = []

htmlhelp_basename = 'pinsimdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
}

latex_documents = [
    (master_doc, 'pinsim.tex', 'pinsim Documentation',
     author, 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'pinsim', 'pinsim Documentation',
     [author], 1)
]

# -- Options for Texinfo output -------------------------------------------

texinfo_documents = [
    (master_doc, 'pinsim', 'pinsim Documentation',
     author, 'pinsim', 'Critical-window experiments for disordered pinning '
     'and directed polymer models.', 'Miscellaneous'),
]

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy/', None),
                       'astropy': ('https://docs.astropy.org/en/stable/', None)}


def remove_module_docstring(app, what, name, obj, options, lines):
    if what == "module" and name in ["pinsim.cli"]:
        del lines[:]


def setup(app):
    app.connect("autodoc-process-docstring", remove_module_docstring)
