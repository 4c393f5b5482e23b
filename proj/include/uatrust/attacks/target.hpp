#pragma once

// Reconnaissance: what an unauthenticated peer learns from FindServers and GetEndpoints.

#include "uatrust/client/client.hpp"

namespace uatrust::attacks {

struct TargetDescriptor {
    std::string address;
    std::uint16_t port = 4840;
    codec::ApplicationDescription application;
    std::vector<codec::EndpointDescription> endpoints;
    std::optional<pki::CertificateRecord> server_certificate;  // from the first secure endpoint

    std::string url() const { return net::make_endpoint_url(address, port); }
    net::Endpoint dial_endpoint() const { return {address, port, {}}; }
};

enum class ScanStatus { Found, Closed, NotOpcUa, Timeout };
const char* to_string(ScanStatus status);

struct ScanFinding {
    std::string target;  // as given
    ScanStatus status = ScanStatus::Closed;
    std::string detail;
};

struct ScanResult {
    std::vector<TargetDescriptor> descriptors;
    std::vector<ScanFinding> findings;  // one per target, in input order
};

struct ScanOptions {
    net::Millis timeout{3000};
    std::shared_ptr<net::Transcript> transcript;
};

// Targets are "host[:port]" or opc.tcp URLs; the port defaults to 4840. FindServers and
// GetEndpoints run over mode-None channels. Per-target failures are recorded, never thrown.
ScanResult scan(const std::vector<std::string>& targets, const ScanOptions& options = {});

// Single-target form. Errors: client::ClientError from discovery.
TargetDescriptor describe_target(const std::string& target, const ScanOptions& options = {});

}  // namespace uatrust::attacks
