#pragma once

#include <string_view>

namespace bcl {

// Pinned copy of data/context/bcl_context.json so binaries work without the
// source tree. A test keeps the two in sync.
inline constexpr std::string_view kDefaultContextJson = R"json({
  "RatedCapacity": "https://w3id.org/emmo/domain/electrochemistry#electrochemistry_9b3b4668_0795_4a35_9965_2af383497a26",
  "Manufacturer": "https://schema.org/manufacturer",
  "PositiveElectrode": "https://example.org/bcl/vocab#PositiveElectrode",
  "NegativeElectrode": "https://example.org/bcl/vocab#NegativeElectrode",
  "LowerCutoffVoltage": "https://example.org/bcl/vocab#LowerCutoffVoltage",
  "UpperCutoffVoltage": "https://example.org/bcl/vocab#UpperCutoffVoltage",
  "MinimumTemperature": "https://example.org/bcl/vocab#MinimumTemperature",
  "MaximumTemperature": "https://example.org/bcl/vocab#MaximumTemperature",
  "BatteryCell": "https://example.org/bcl/vocab#BatteryCell",
  "type": "http://www.w3.org/1999/02/22-rdf-syntax-ns#type",
  "name": "https://schema.org/name",
  "subjectOf": "https://schema.org/subjectOf",
  "citation": "https://schema.org/citation",
  "isReferencedBy": "http://purl.org/dc/terms/isReferencedBy",
  "CyclingProtocol": "https://example.org/bcl/vocab#CyclingProtocol",
  "InstructionBlock": "https://example.org/bcl/vocab#InstructionBlock",
  "Parameter": "https://example.org/bcl/vocab#Parameter",
  "parameters": "https://example.org/bcl/vocab#parameters",
  "instructions": "https://example.org/bcl/vocab#instructions",
  "sequence": "https://example.org/bcl/vocab#sequence",
  "termination": "https://example.org/bcl/vocab#termination",
  "repeat": "https://example.org/bcl/vocab#repeat",
  "value": "http://www.w3.org/1999/02/22-rdf-syntax-ns#value",
  "unit": "https://example.org/bcl/vocab#unit",
  "ElectricCurrent": "https://example.org/bcl/vocab#ElectricCurrent",
  "Voltage": "https://example.org/bcl/vocab#Voltage",
  "Rest": "https://example.org/bcl/vocab#Rest",
  "Time": "https://example.org/bcl/vocab#Time",
  "CRate": "https://example.org/bcl/vocab#CRate",
  "Ampere": "http://qudt.org/vocab/unit/A",
  "Volt": "http://qudt.org/vocab/unit/V",
  "Second": "http://qudt.org/vocab/unit/SEC",
  "AmpereHour": "http://qudt.org/vocab/unit/A-HR",
  "DegreeCelsius": "http://qudt.org/vocab/unit/DEG_C"
}
)json";

}  // namespace bcl
