import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/net.js";
import { FakeTransport, stateTick, trialStart } from "./fakes.js";

function makeClient() {
  const transports: FakeTransport[] = [];
  const pending: Array<() => void> = [];
  const client = new SessionClient(
    "ws://test/ws",
    () => {
      const t = new FakeTransport();
      transports.push(t);
      return t;
    },
    () => 1000,
    (fn) => pending.push(fn),
  );
  return { client, transports, pending };
}

describe("session client", () => {
  it("says hello on connect and adopts the server session id", () => {
    const { client, transports } = makeClient();
    client.connect();
    const t = transports[0];
    t.open();
    expect(t.sent.map((m) => m.type)).toEqual(["hello"]);
    t.deliver(trialStart());
    expect(client.sessionId).toBe("s1");
  });

  it("emits exactly one goal_choice per prompt, even on double clicks", () => {
    const { client, transports } = makeClient();
    client.connect();
    const t = transports[0];
    t.open();
    t.deliver(trialStart());
    t.deliver(stateTick());
    expect(client.view.selectable).toBe(true);

    expect(client.submitGoal(0)).toBe(true);
    expect(client.submitGoal(0)).toBe(false); // locked until acknowledged
    expect(client.submitGoal(1)).toBe(false);
    const goals = t.sent.filter((m) => m.type === "goal_choice");
    expect(goals).toHaveLength(1);
    expect(goals[0].payload).toEqual({ task_id: 0 });

    // server acknowledges by streaming; our own task still pending keeps
    // the input locked for movement ticks
    t.deliver(stateTick({ tick: 2, timer: 1 }));
    expect(client.view.selectable).toBe(false);
    expect(client.submitGoal(1)).toBe(false);

    // task 0 captured: next prompt opens and accepts exactly one more click
    t.deliver(stateTick({ tick: 5, timer: 4, remaining: [1] }));
    expect(client.view.selectable).toBe(true);
    expect(client.submitGoal(1)).toBe(true);
    expect(client.submitGoal(1)).toBe(false);
    expect(t.sent.filter((m) => m.type === "goal_choice")).toHaveLength(2);
  });

  it("ignores clicks on gone tasks and empty space", () => {
    const { client, transports } = makeClient();
    client.connect();
    const t = transports[0];
    t.open();
    t.deliver(trialStart());
    t.deliver(stateTick({ remaining: [1] }));
    expect(client.submitGoal(0)).toBe(false); // already captured
    expect(t.sent.filter((m) => m.type === "goal_choice")).toHaveLength(0);
  });

  it("unlocks after a server error so the player can retry", () => {
    const { client, transports } = makeClient();
    client.connect();
    const t = transports[0];
    t.open();
    t.deliver(trialStart());
    t.deliver(stateTick());
    client.submitGoal(0);
    t.deliver({ type: "error", payload: { reason: "task gone" } });
    expect(client.view.selectable).toBe(true);
    expect(client.submitGoal(1)).toBe(true);
  });

  it("resumes after a refresh with the server's timer, not its own", () => {
    const { client, transports, pending } = makeClient();
    client.connect();
    const t1 = transports[0];
    t1.open();
    t1.deliver(trialStart());
    t1.deliver(stateTick({ tick: 3, timer: 3 }));
    expect(client.view.timer).toBe(3);

    // connection drops mid-trial; the scheduled reconnect kicks in
    t1.dropConnection();
    expect(client.view.connected).toBe(false);
    pending.splice(0).forEach((fn) => fn());
    const t2 = transports[1];
    t2.open();

    const hello = t2.sent.find((m) => m.type === "hello");
    expect(hello?.session_id).toBe("s1"); // resume, not a fresh session

    t2.deliver(trialStart({ resumed: true }));
    t2.deliver(stateTick({ tick: 8, timer: 7 }));
    expect(client.view.timer).toBe(7); // server's clock wins
    expect(client.view.connected).toBe(true);
  });

  it("sends exactly one preference per prompt", () => {
    const { client, transports } = makeClient();
    client.connect();
    const t = transports[0];
    t.open();
    t.deliver(trialStart());
    t.deliver({ type: "preference_prompt", payload: { options: ["red", "blue"] } });
    expect(client.submitPreference("green")).toBe(false); // not an option
    expect(client.submitPreference("blue")).toBe(true);
    expect(client.submitPreference("red")).toBe(false); // one answer only
    const prefs = t.sent.filter((m) => m.type === "preference_choice");
    expect(prefs).toHaveLength(1);
    expect(prefs[0].payload).toEqual({ robot_tag: "blue" });
  });
});
