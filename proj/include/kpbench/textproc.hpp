#pragma once

#include "kpbench/textproc/stemmer.hpp"
#include "kpbench/textproc/stopwords.hpp"
#include "kpbench/textproc/tokenizer.hpp"
#include "kpbench/textproc/utf8.hpp"
