#pragma once

#define AMBIG_VERSION "0.1.0"
