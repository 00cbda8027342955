import os
import sys

sys.path.insert(0, os.path.abspath(".."))

from brbsim.constants import VERSION  # noqa: E402

# Sphinx configuration for the brbsim documentation.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project -----------------------------------------------------------------

project = "brbsim"
copyright = "2023-present, japandotorg"
author = "japandotorg"
version = ".".join(VERSION.split(".")[:2])
release = VERSION


# -- General -----------------------------------------------------------------

extensions = [
    "recommonmark",
    "sphinx_rtd_theme",
    "sphinx.ext.autodoc",
    "sphinx.ext.autosectionlabel",
    "sphinx.ext.viewcode",
    "sphinx.ext.napoleon",
    "sphinx.ext.intersphinx",
]

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

autosectionlabel_prefix_document = True

# optional extra
autodoc_mock_imports = ["cryptography"]
autodoc_member_order = "bysource"
autodoc_typehints = "description"
autodoc_default_options = {
    "members": True,
    "show-inheritance": True,
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
}

default_role = "any"


# -- HTML --------------------------------------------------------------------

html_theme = "sphinx_rtd_theme"
html_static_path = ["_static"]
html_title = f"brbsim {release}"
