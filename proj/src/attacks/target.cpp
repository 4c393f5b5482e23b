#include "uatrust/attacks/target.hpp"

namespace uatrust::attacks {

using client::ClientErrc;
using client::ClientError;

const char* to_string(ScanStatus status)
{
    switch (status) {
    case ScanStatus::Found: return "found";
    case ScanStatus::Closed: return "closed";
    case ScanStatus::NotOpcUa: return "not-opcua";
    case ScanStatus::Timeout: return "timeout";
    }
    return "?";
}

namespace {

net::Endpoint parse_target(const std::string& target)
{
    if (target.rfind("opc.tcp://", 0) == 0) return net::parse_endpoint_url(target);
    auto ep = net::parse_host_port(target, 4840);
    if (ep.port == 0) throw net::NetError(net::NetErrc::UrlInvalid, "port 0 in " + target);
    return ep;
}

}  // namespace

TargetDescriptor describe_target(const std::string& target, const ScanOptions& options)
{
    net::Endpoint ep;
    try {
        ep = parse_target(target);
    } catch (const net::NetError& e) {
        throw ClientError(ClientErrc::ConnectFailed, e.what());
    }
    client::DialOptions dial;
    dial.timeout = options.timeout;
    dial.transcript = options.transcript;
    const std::string url = net::make_endpoint_url(ep.host, ep.port, ep.path);

    TargetDescriptor d;
    d.address = ep.host;
    d.port = ep.port;
    const auto servers = client::find_servers(url, dial);
    d.endpoints = client::discover(url, dial);
    if (!servers.empty()) {
        d.application = servers.front();
    } else if (!d.endpoints.empty()) {
        d.application = d.endpoints.front().server;
    }
    for (const auto& e : d.endpoints) {
        if (e.security_mode == codec::MessageSecurityMode::None || !e.server_certificate ||
            e.server_certificate->empty())
            continue;
        try {
            d.server_certificate = pki::CertificateRecord::parse(*e.server_certificate);
            break;
        } catch (const pki::PkiError&) {
            // keep looking; a later endpoint may carry a usable certificate
        }
    }
    return d;
}

ScanResult scan(const std::vector<std::string>& targets, const ScanOptions& options)
{
    ScanResult result;
    for (const auto& t : targets) {
        ScanFinding f{t, ScanStatus::Found, {}};
        try {
            auto d = describe_target(t, options);
            f.detail = std::to_string(d.endpoints.size()) + " endpoints";
            result.descriptors.push_back(std::move(d));
        } catch (const ClientError& e) {
            f.detail = e.what();
            switch (e.code()) {
            case ClientErrc::ConnectFailed: f.status = ScanStatus::Closed; break;
            case ClientErrc::Timeout: f.status = ScanStatus::Timeout; break;
            default: f.status = ScanStatus::NotOpcUa; break;
            }
        }
        result.findings.push_back(std::move(f));
    }
    return result;
}

}  // namespace uatrust::attacks
