from .reporting import render_markdown, write_csv, write_json, write_jsonl
from .suite import SUMMARY_HEADER, BoundSuite, EnsembleSpec, SuiteResult, summarize
