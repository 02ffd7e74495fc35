#ifndef MPSTBUS_MPSTBUS_HPP
#define MPSTBUS_MPSTBUS_HPP

#include "mpstbus/board.hpp"
#include "mpstbus/builtins.hpp"
#include "mpstbus/endpoint.hpp"
#include "mpstbus/error.hpp"
#include "mpstbus/fuzz.hpp"
#include "mpstbus/link.hpp"
#include "mpstbus/message.hpp"
#include "mpstbus/oracle.hpp"
#include "mpstbus/roles.hpp"
#include "mpstbus/runner.hpp"
#include "mpstbus/scenario.hpp"
#include "mpstbus/trace.hpp"

#endif // MPSTBUS_MPSTBUS_HPP
