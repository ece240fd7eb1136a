#!/usr/bin/env python
#
# spin_motion documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import spin_motion

# -- General configuration ---------------------------------------------

extensions = ['sphinx.ext.autodoc',
              'sphinx.ext.viewcode',
              "sphinx.ext.intersphinx",
              "sphinx.ext.mathjax",
              'sphinx.ext.napoleon'
              ]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'spin_motion'
copyright = "2024, spin_motion developers"
author = "spin_motion developers"

version = spin_motion.__version__
release = spin_motion.__version__

language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# Napoleon settings
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_include_init_with_doc = False
napoleon_include_private_with_doc = False
napoleon_include_special_with_doc = True
napoleon_use_param = True
napoleon_use_rtype = True

# -- Options for HTML output -------------------------------------------

html_theme = "sphinx_book_theme"
html_theme_options = {}
htmlhelp_basename = 'spin_motiondoc'

# -- Options for the intersphinx extension -----------------------------------

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/pandas-docs/stable", None),
    "xarray": ("https://docs.xarray.dev/en/latest/", None),
    "dask": ("https://docs.dask.org/en/stable/", None),
}

# -- Options for LaTeX and manual page output ----------------------------

latex_documents = [
    (master_doc, 'spin_motion.tex', 'spin_motion Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'spin_motion', 'spin_motion Documentation', [author], 1)
]
