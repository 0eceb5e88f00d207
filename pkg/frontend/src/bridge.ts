/**
 * WebSocket-to-TCP bridge: browsers cannot open raw TCP sockets, so this
 * small node process forwards NDJSON lines between each WebSocket client
 * and its own TCP connection to the gateway.
 *
 *   node dist/bridge.js [--ws-port 8080] [--tcp-host 127.0.0.1] [--tcp-port 7788]
 */
import net from "node:net";
import { WebSocketServer, WebSocket } from "ws";

function argValue(flag: string, fallback: string): string {
  const i = process.argv.indexOf(flag);
  return i >= 0 && process.argv[i + 1] ? process.argv[i + 1]! : fallback;
}

const wsPort = Number(argValue("--ws-port", "8080"));
const tcpHost = argValue("--tcp-host", "127.0.0.1");
const tcpPort = Number(argValue("--tcp-port", "7788"));

const server = new WebSocketServer({ port: wsPort });
console.log(`bridge: ws://127.0.0.1:${wsPort} <-> tcp ${tcpHost}:${tcpPort}`);

server.on("connection", (ws: WebSocket) => {
  const tcp = net.createConnection({ host: tcpHost, port: tcpPort });
  tcp.setEncoding("utf8");
  tcp.on("data", (chunk: string) => {
    if (ws.readyState === WebSocket.OPEN) ws.send(chunk);
  });
  tcp.on("close", () => ws.close());
  tcp.on("error", (err) => {
    console.error(`bridge: tcp error: ${err.message}`);
    ws.close();
  });
  ws.on("message", (data) => {
    tcp.write(data.toString());
  });
  ws.on("close", () => tcp.end());
  ws.on("error", () => tcp.end());
});
