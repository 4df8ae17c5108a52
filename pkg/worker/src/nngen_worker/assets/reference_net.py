import torch
import torch.nn as nn
import torch.nn.functional as F


def supported_hyperparameters():
    return {"lr": 0.05, "momentum": 0.9}


class Net(nn.Module):
    def __init__(self, in_shape, num_classes):
        super().__init__()
        channels, height, width = in_shape
        self.conv1 = nn.Conv2d(channels, 16, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(16, 32, kernel_size=3, padding=1)
        self.pool = nn.MaxPool2d(2)
        flat = 32 * (height // 4) * (width // 4)
        self.fc1 = nn.Linear(flat, 128)
        self.fc2 = nn.Linear(128, num_classes)

    def forward(self, x):
        x = self.pool(F.relu(self.conv1(x)))
        x = self.pool(F.relu(self.conv2(x)))
        x = torch.flatten(x, 1)
        x = F.relu(self.fc1(x))
        return self.fc2(x)

    def train_setup(self, device):
        self.to(device)
        hp = supported_hyperparameters()
        self.optimizer = torch.optim.SGD(self.parameters(), lr=hp["lr"], momentum=hp["momentum"])
        self.criterion = nn.CrossEntropyLoss()

    def learn(self, data, target, device):
        data = data.to(device)
        target = target.to(device)
        self.optimizer.zero_grad()
        loss = self.criterion(self(data), target)
        loss.backward()
        self.optimizer.step()
        return float(loss.item())
