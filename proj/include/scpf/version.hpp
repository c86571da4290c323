#pragma once

#define SCPF_VERSION "0.1.0"
