"""libready: measure how proficiently LLMs use third-party libraries.

The pipeline renders library-specific prompts from a scenario catalog,
collects repeated model responses, scores each extracted snippet on five
quality dimensions (judge-scored functional suitability, performance,
and reliability; static maintainability and usability), aggregates
per-(library, scenario, model) proficiency with bootstrap CIs, and
compares competing libraries with effect sizes, winner distributions,
failure taxonomies, and popularity concordance.
"""

__version__ = "0.1.0"
