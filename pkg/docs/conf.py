# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

from pathlib import Path
import re
import sys
from typing import Callable

from sphinx import addnodes
from sphinx.application import Sphinx
from sphinx.environment import BuildEnvironment

THIS_FILE = Path(__file__).resolve()
THIS_DIR = THIS_FILE.parent
REPO_ROOT = THIS_DIR.parent

sys.path.insert(0, str(REPO_ROOT / "src"))

project = "triradical"
copyright = "2024, the triradical developers"
author = "the triradical developers"
_VERSION_RE = re.compile(r"^__version__ = '(?P<version>[^']+)'$", re.MULTILINE)
release = _VERSION_RE.search((REPO_ROOT / "src/triradical/__init__.py").read_text())["version"]

# -- General configuration ---------------------------------------------------

extensions = ["sphinx.ext.autodoc", "sphinx.ext.mathjax"]
templates_path = []
exclude_patterns = ["_build"]
default_role = "any"
autodoc_member_order = "bysource"

# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
pygments_style = "sphinx"
html_static_path = []

rst_prolog = rf"""
.. role:: bash(code)
    :language: bash
"""


def annotator(
    annot: str,
) -> Callable[[BuildEnvironment, str, addnodes.desc_signature], str]:
    """
    Create a parse_node function that adds a parenthesized annotation to an object signature.
    """

    def parse_node(
        env: BuildEnvironment, sig: str, signode: addnodes.desc_signature
    ) -> str:
        signode += addnodes.desc_name(sig, sig)
        signode += addnodes.desc_sig_space()
        signode += addnodes.desc_annotation("", f"({annot})")
        return sig

    return parse_node


def setup(app: Sphinx):
    app.add_object_type(  # type: ignore
        "config-key",
        "config-key",
        indextemplate="pair: configuration key; %s",
        parse_node=annotator("configuration key"),
    )
    app.add_object_type(  # type: ignore
        "subcommand",
        "subcommand",
        indextemplate="pair: subcommand; %s",
        parse_node=annotator("subcommand"),
    )
    app.add_object_type(  # type: ignore
        "output-file",
        "output-file",
        indextemplate="pair: output file; %s",
        parse_node=annotator("output file"),
    )
