#pragma once

#include "igs/channel.hpp"
#include "igs/cli.hpp"
#include "igs/common.hpp"
#include "igs/conic/bisect.hpp"
#include "igs/conic/conelp.hpp"
#include "igs/conic/cones.hpp"
#include "igs/conic/sdp.hpp"
#include "igs/conic/socp.hpp"
#include "igs/experiments.hpp"
#include "igs/oracle.hpp"
#include "igs/proper.hpp"
#include "igs/pseudo.hpp"
#include "igs/signaling.hpp"
#include "igs/verify.hpp"
