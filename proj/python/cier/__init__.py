# Copyright 2026 The CIER Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Explainable recommendation with rating-conditioned explanations."""

from ._cier import (
    Error,
    ParseError,
    Pipeline,
    ValidationError,
    bleu,
    curriculum_schedule,
    evaluate_file,
    explainability,
    lexicon_score,
    rating_score,
    rouge,
    smoothed_distribution,
    synthesize,
    tokenize,
)

__all__ = [
    "Error",
    "ParseError",
    "Pipeline",
    "ValidationError",
    "bleu",
    "curriculum_schedule",
    "evaluate_file",
    "explainability",
    "lexicon_score",
    "rating_score",
    "rouge",
    "smoothed_distribution",
    "synthesize",
    "tokenize",
]
